// Probability bar chart: one bar per emotion, grouped by category, sorted by
// probability inside each group, decided labels highlighted.

import type { EmotionScore, PredictionResponse } from "./api.js";
import { categoryColor } from "./palette.js";

/** Emotions bucketed by category (taxonomy order), sorted by score desc. */
export function groupByCategory(
  emotions: EmotionScore[],
  categoryOrder: string[],
): Map<string, EmotionScore[]> {
  const groups = new Map<string, EmotionScore[]>();
  for (const name of categoryOrder) groups.set(name, []);
  for (const emotion of emotions) {
    let bucket = groups.get(emotion.category);
    if (!bucket) {
      bucket = [];
      groups.set(emotion.category, bucket);
    }
    bucket.push(emotion);
  }
  for (const bucket of groups.values()) {
    bucket.sort((a, b) => b.probability - a.probability);
  }
  return groups;
}

/**
 * Names to highlight. With no override this is the server's decided set
 * (its per-label thresholds). With an override it is the client-side filter
 * at that single threshold, keeping the argmax fallback so the set is never
 * empty: raising the threshold can only shrink it, down to the top emotion.
 */
export function highlightSet(
  response: PredictionResponse,
  thresholdOverride: number | null,
): Set<string> {
  if (thresholdOverride === null) return new Set(response.decided);
  const picked = response.emotions
    .filter((e) => e.probability >= thresholdOverride)
    .map((e) => e.name);
  if (picked.length === 0 && response.emotions.length > 0) {
    let top = response.emotions[0]!;
    for (const e of response.emotions) {
      if (e.probability > top.probability) top = e;
    }
    picked.push(top.name);
  }
  return new Set(picked);
}

function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBars(
  root: HTMLElement,
  response: PredictionResponse,
  categoryOrder: string[],
  thresholdOverride: number | null,
): void {
  const groups = groupByCategory(response.emotions, categoryOrder);
  const decided = highlightSet(response, thresholdOverride);
  const parts: string[] = [];
  for (const [category, bucket] of groups) {
    if (bucket.length === 0) continue;
    const color = categoryColor(category, categoryOrder);
    parts.push(
      `<div class="category-group" data-category="${escapeHtml(category)}">`,
      `<div class="category-title" style="color:${color}">${escapeHtml(category)}</div>`,
    );
    for (const emotion of bucket) {
      const pct = (emotion.probability * 100).toFixed(1);
      const isDecided = decided.has(emotion.name);
      parts.push(`
        <div class="bar-row${isDecided ? " decided" : ""}"
             data-emotion="${escapeHtml(emotion.name)}"
             data-category="${escapeHtml(category)}"
             data-decided="${isDecided}">
          <div class="bar-label">${escapeHtml(emotion.name)}</div>
          <div class="bar-track">
            <div class="bar-fill" style="width:${pct}%;background:${color}"></div>
          </div>
          <div class="bar-value">${pct}%</div>
        </div>`);
    }
    parts.push("</div>");
  }
  root.innerHTML = parts.join("");
}
