/** Order statistics and least-squares helpers shared by the figure builders. */

export function quantile(data: number[], q: number): number {
  if (data.length === 0) {
    return NaN;
  }
  const sorted = [...data].sort((a, b) => a - b);
  const pos = (sorted.length - 1) * q;
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  if (lo === hi) {
    return sorted[lo];
  }
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo);
}

export function median(data: number[]): number {
  return quantile(data, 0.5);
}

/** Slope and intercept of the least-squares line through (x, y) points. */
export function linearFit(xs: number[], ys: number[]): { slope: number; intercept: number } {
  const n = xs.length;
  if (n < 2) {
    return { slope: NaN, intercept: NaN };
  }
  const mx = xs.reduce((a, b) => a + b, 0) / n;
  const my = ys.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const slope = sxy / sxx;
  return { slope, intercept: my - slope * mx };
}

export function logLogSlope(xs: number[], ys: number[]): number {
  const pts = xs
    .map((x, i) => [x, ys[i]] as const)
    .filter(([x, y]) => x > 0 && y > 0 && Number.isFinite(x) && Number.isFinite(y));
  return linearFit(pts.map(([x]) => Math.log(x)), pts.map(([, y]) => Math.log(y))).slope;
}
