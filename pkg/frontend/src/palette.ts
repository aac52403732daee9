// Category color palette. The named entries follow the usual sentiment
// color convention (positive green, negative red, ambiguous blue); any other
// category name gets a stable color from the fallback cycle, so nothing
// breaks on taxonomies with different groupings.

const NAMED: Record<string, string> = {
  positive: "#2e9e4f",
  negative: "#d64545",
  ambiguous: "#4575d6",
  neutral: "#8a8a8a",
};

const FALLBACK = [
  "#b8860b",
  "#7b4fd6",
  "#d6668f",
  "#2a9d8f",
  "#c76b1f",
  "#5f7a2e",
  "#476c8a",
  "#a04a9e",
  "#6b6b2a",
];

export function categoryColor(category: string, categoryOrder: string[]): string {
  const named = NAMED[category.toLowerCase()];
  if (named) return named;
  const index = Math.max(0, categoryOrder.indexOf(category));
  return FALLBACK[index % FALLBACK.length]!;
}
