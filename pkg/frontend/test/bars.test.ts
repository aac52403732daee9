import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { mountApp, type App } from "../src/app.js";
import { highlightSet } from "../src/bars.js";
import {
  N_CATEGORIES,
  N_EMOTIONS,
  fixturePrediction,
  fixtureService,
  fixtureTaxonomy,
  type FixtureService,
} from "./fixtures.js";

async function probedApp(): Promise<{ app: App; service: FixtureService }> {
  const service = fixtureService();
  const app = mountApp(document.body, new ApiClient("", service.fetch));
  await app.boot();
  const input = document.getElementById("probe-text") as HTMLTextAreaElement;
  input.value = "a probe sentence";
  await app.probe();
  return { app, service };
}

function highlightedNames(): Set<string> {
  const rows = document.querySelectorAll('.bar-row[data-decided="true"]');
  return new Set(Array.from(rows, (row) => (row as HTMLElement).dataset.emotion!));
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("probability bars", () => {
  it("renders exactly one bar per taxonomy emotion", async () => {
    await probedApp();
    expect(document.querySelectorAll(".bar-row")).toHaveLength(N_EMOTIONS);
  });

  it("groups bars into the taxonomy's categories, in taxonomy order", async () => {
    const { service } = await probedApp();
    const groups = Array.from(
      document.querySelectorAll(".category-group"),
      (g) => (g as HTMLElement).dataset.category,
    );
    expect(groups).toEqual(Object.keys(service.taxonomy.categories));
    expect(groups).toHaveLength(N_CATEGORIES);
    for (const group of document.querySelectorAll(".category-group")) {
      const category = (group as HTMLElement).dataset.category!;
      const members = new Set(service.taxonomy.categories[category]);
      for (const row of group.querySelectorAll(".bar-row")) {
        expect((row as HTMLElement).dataset.category).toBe(category);
        expect(members.has((row as HTMLElement).dataset.emotion!)).toBe(true);
      }
    }
  });

  it("sorts bars by probability inside each group", async () => {
    await probedApp();
    const taxonomy = fixtureTaxonomy();
    const score = new Map(
      fixturePrediction(taxonomy, "x").emotions.map((e) => [e.name, e.probability]),
    );
    for (const group of document.querySelectorAll(".category-group")) {
      const probs = Array.from(
        group.querySelectorAll(".bar-row"),
        (row) => score.get((row as HTMLElement).dataset.emotion!)!,
      );
      for (let i = 1; i < probs.length; i++) {
        expect(probs[i]!).toBeLessThanOrEqual(probs[i - 1]!);
      }
    }
  });

  it("highlights the server's decided set when no override is active", async () => {
    const { service } = await probedApp();
    const expected = new Set(fixturePrediction(service.taxonomy, "x").decided);
    expect(highlightedNames()).toEqual(expected);
  });

  it("filters monotonically as the threshold slider rises", async () => {
    const { app } = await probedApp();
    let previous: Set<string> | null = null;
    for (let t = 0.05; t <= 0.99; t += 0.05) {
      app.setThresholdOverride(t);
      const current = highlightedNames();
      expect(current.size).toBeGreaterThan(0);
      if (previous !== null) {
        expect(current.size).toBeLessThanOrEqual(previous.size);
        for (const name of current) expect(previous.has(name)).toBe(true);
      }
      previous = current;
    }
  });

  it("shrinks the highlighted set between 0.5 and 0.9", async () => {
    const { app } = await probedApp();
    app.setThresholdOverride(0.5);
    const at05 = highlightedNames();
    app.setThresholdOverride(0.9);
    const at09 = highlightedNames();
    expect(at09.size).toBeLessThan(at05.size);
    for (const name of at09) expect(at05.has(name)).toBe(true);
  });

  it("keeps the top emotion highlighted above every score (argmax fallback)", () => {
    const response = fixturePrediction(fixtureTaxonomy(), "x");
    const top = response.emotions.reduce((a, b) =>
      b.probability > a.probability ? b : a,
    );
    expect(highlightSet(response, 0.999)).toEqual(new Set([top.name]));
  });
});
