// In-process fixture service: a fetch-compatible function implementing the
// documented endpoints over a synthetic 88-emotion, 9-category taxonomy.

import type {
  HierarchyDoc,
  PredictionResponse,
  TaxonomyDoc,
  TreeNode,
} from "../src/api.js";

export const N_EMOTIONS = 88;
export const N_CATEGORIES = 9;

export function fixtureTaxonomy(): TaxonomyDoc {
  const emotions = Array.from(
    { length: N_EMOTIONS },
    (_, i) => `emotion${String(i).padStart(2, "0")}`,
  );
  const categories: Record<string, string[]> = {};
  for (let c = 0; c < N_CATEGORIES; c++) categories[`cat${c}`] = [];
  emotions.forEach((name, i) => categories[`cat${i % N_CATEGORIES}`]!.push(name));
  return { emotions, categories };
}

/** Distinct deterministic scores in [0, 1); 37 is coprime with 88. */
export function fixtureScore(index: number): number {
  return ((index * 37 + 11) % N_EMOTIONS) / N_EMOTIONS;
}

export function fixturePrediction(
  taxonomy: TaxonomyDoc,
  text: string,
): PredictionResponse {
  const emotions = taxonomy.emotions.map((name, i) => ({
    name,
    category: `cat${i % N_CATEGORIES}`,
    probability: fixtureScore(i),
  }));
  const decided = emotions.filter((e) => e.probability >= 0.5).map((e) => e.name);
  const byCategory = new Map<string, number>();
  for (const e of emotions) {
    byCategory.set(e.category, Math.max(byCategory.get(e.category) ?? 0, e.probability));
  }
  return {
    emotions,
    categories: Object.keys(taxonomy.categories).map((name) => ({
      name,
      probability: byCategory.get(name) ?? 0,
    })),
    decided,
    model: {
      learner: "fixture",
      features: "fixture",
      thresholds: Array(N_EMOTIONS).fill(0.5),
      metadata: { text },
    },
  };
}

/** Balanced pairwise merging; heights rise with merge order, leaves at 0. */
export function fixtureTree(leafNames: string[]): TreeNode {
  let queue: TreeNode[] = leafNames.map((name) => ({ name, height: 0 }));
  const total = leafNames.length - 1;
  let k = 0;
  while (queue.length > 1) {
    const next: TreeNode[] = [];
    for (let i = 0; i + 1 < queue.length; i += 2) {
      k += 1;
      next.push({ children: [queue[i]!, queue[i + 1]!], height: k / total });
    }
    if (queue.length % 2 === 1) next.push(queue[queue.length - 1]!);
    queue = next;
  }
  return queue[0]!;
}

export type PendingPredict = {
  text: string;
  signal: AbortSignal | undefined;
  resolve: () => void;
};

export type FixtureOptions = {
  hierarchy?: boolean;
  failPredicts?: number;
  holdPredicts?: boolean;
  predictStatus?: { code: number; error: string };
};

export type FixtureService = {
  fetch: typeof fetch;
  taxonomy: TaxonomyDoc;
  calls: { taxonomy: number; hierarchy: number; predict: number };
  pending: PendingPredict[];
};

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function fixtureService(options: FixtureOptions = {}): FixtureService {
  const taxonomy = fixtureTaxonomy();
  const hierarchyDoc: HierarchyDoc = {
    level: "emotion",
    linkage: "average",
    excluded: [],
    tree: fixtureTree(taxonomy.emotions),
  };
  const calls = { taxonomy: 0, hierarchy: 0, predict: 0 };
  const pending: PendingPredict[] = [];
  let failuresLeft = options.failPredicts ?? 0;

  const fetchImpl = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const path = String(input);
    if (path.endsWith("/taxonomy")) {
      calls.taxonomy += 1;
      return jsonResponse(taxonomy);
    }
    if (path.endsWith("/hierarchy")) {
      calls.hierarchy += 1;
      if (options.hierarchy === false) {
        return jsonResponse({ error: "no hierarchy bundled in this artifact" }, 404);
      }
      return jsonResponse(hierarchyDoc);
    }
    if (path.endsWith("/predict")) {
      calls.predict += 1;
      if (failuresLeft > 0) {
        failuresLeft -= 1;
        throw new TypeError("fetch failed");
      }
      if (options.predictStatus) {
        return jsonResponse(
          { error: options.predictStatus.error },
          options.predictStatus.code,
        );
      }
      const { text } = JSON.parse(String(init?.body ?? "{}"));
      const response = jsonResponse(fixturePrediction(taxonomy, text));
      if (!options.holdPredicts) return response;
      return new Promise<Response>((resolve, reject) => {
        const signal = init?.signal ?? undefined;
        const abort = () => reject(new DOMException("aborted", "AbortError"));
        if (signal?.aborted) return abort();
        signal?.addEventListener("abort", abort);
        pending.push({ text, signal, resolve: () => resolve(response) });
      });
    }
    return jsonResponse({ error: `unknown path ${path}` }, 404);
  }) as typeof fetch;

  return { fetch: fetchImpl, taxonomy, calls, pending };
}
