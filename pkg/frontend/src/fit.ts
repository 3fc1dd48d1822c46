/** Least squares on (log x, log y); the reference check for slope annotations. */
export function logLogSlope(xs: number[], ys: number[]): { slope: number; intercept: number } {
  if (xs.length !== ys.length || xs.length < 2) {
    throw new Error(`need >= 2 paired points, got ${xs.length}/${ys.length}`);
  }
  const lx = xs.map((x) => {
    if (x <= 0) throw new Error(`log undefined for x = ${x}`);
    return Math.log(x);
  });
  const ly = ys.map((y) => {
    if (y <= 0) throw new Error(`log undefined for y = ${y}`);
    return Math.log(y);
  });
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx === 0) throw new Error("all x values identical; slope undefined");
  const slope = sxy / sxx;
  return { slope, intercept: my - slope * mx };
}
