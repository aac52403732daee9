// Typed client for the inference service. Field names mirror the service's
// JSON documents exactly; everything the UI renders comes from these.

export type EmotionScore = {
  name: string;
  category: string;
  probability: number;
};

export type CategoryScore = {
  name: string;
  probability: number;
};

export type ModelInfo = {
  learner: string;
  features: string;
  thresholds: number[];
  metadata: Record<string, unknown>;
};

export type PredictionResponse = {
  emotions: EmotionScore[];
  categories: CategoryScore[];
  decided: string[];
  model: ModelInfo;
};

export type TaxonomyDoc = {
  emotions: string[];
  categories: Record<string, string[]>;
};

export type TreeNode = {
  name?: string;
  children?: TreeNode[];
  height: number;
};

export type HierarchyDoc = {
  level: string;
  linkage: string;
  excluded: string[];
  tree: TreeNode;
};

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.error === "string") return body.error;
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return response.statusText || `HTTP ${response.status}`;
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return response.json() as Promise<T>;
  }

  taxonomy(): Promise<TaxonomyDoc> {
    return this.getJson<TaxonomyDoc>("/taxonomy");
  }

  /** null when the artifact has no bundled hierarchy (service answers 404). */
  async hierarchy(): Promise<HierarchyDoc | null> {
    const response = await this.fetchImpl(this.baseUrl + "/hierarchy");
    if (response.status === 404) return null;
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return response.json() as Promise<HierarchyDoc>;
  }

  async predict(text: string, signal?: AbortSignal): Promise<PredictionResponse> {
    const response = await this.fetchImpl(this.baseUrl + "/predict", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
      signal,
    });
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return response.json() as Promise<PredictionResponse>;
  }
}
