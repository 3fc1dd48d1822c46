import { numeric, readCsv, readJson } from "./csv.js";
import type { ChartOption } from "./render.js";
import {
  ESTIMATOR_ERROR_COLUMNS,
  KL_SWEEP_COLUMNS,
  LowerBoundReport,
  MEDIANS_COLUMNS,
  RateFitReport,
  TRACE_COLUMNS,
} from "./schema.js";

/** Slope annotations carry the upstream fit verbatim: 12 decimals ≪ the 1e-9 contract. */
export function formatSlope(slope: number): string {
  return slope.toFixed(12);
}

export interface BuiltPlot {
  option: ChartOption;
  /** plain-text annotation lines rendered into the figure (exposed for tests) */
  annotations: string[];
}

function annotationGraphic(lines: string[]): ChartOption["graphic"] {
  return [
    {
      type: "text",
      right: 30,
      top: 30,
      style: {
        text: lines.join("\n"),
        fontSize: 13,
        fontFamily: "monospace",
        fill: "#333",
      },
    },
  ];
}

function powerLawPoints(
  slope: number,
  intercept: number,
  xs: number[],
): [number, number][] {
  const lo = Math.min(...xs);
  const hi = Math.max(...xs);
  return [lo, hi].map((x) => [x, Math.exp(intercept + slope * Math.log(x))]);
}

/** Cumulative regret (analytic and realized) against the round index. */
export function buildRegretCurve(tracePath: string): BuiltPlot {
  const rows = readCsv(tracePath, TRACE_COLUMNS);
  const t = numeric(rows, "t");
  const analytic = numeric(rows, "cum_regret_analytic");
  const realized = numeric(rows, "cum_regret_realized");
  const zip = (ys: number[]) => t.map((x, i) => [x, ys[i]] as [number, number]);
  const annotations = [`rounds ${t.length}`, `final analytic ${analytic[analytic.length - 1].toPrecision(6)}`];
  return {
    option: {
      title: { text: "Cumulative regret", left: "center" },
      tooltip: { trigger: "axis" },
      legend: { bottom: 0 },
      xAxis: { type: "value", name: "round t" },
      yAxis: { type: "value", name: "cumulative regret" },
      series: [
        { name: "analytic", type: "line", showSymbol: false, data: zip(analytic) },
        { name: "realized", type: "line", showSymbol: false, data: zip(realized) },
      ],
      graphic: annotationGraphic(annotations),
    },
    annotations,
  };
}

/**
 * Median final regret against the horizon on log-log axes, with the fitted
 * power law from the rate report and an optional theoretical reference slope.
 * The annotated slope is the report's value verbatim.
 */
export function buildRateFit(
  mediansPath: string,
  ratePath: string,
  policy?: string,
  refExponent?: number,
): BuiltPlot {
  const rows = readCsv(mediansPath, MEDIANS_COLUMNS);
  const report = readJson<RateFitReport>(ratePath);
  const policies = Object.keys(report.fits);
  if (policy === undefined) {
    if (policies.length !== 1) {
      throw new Error(`rate report covers ${JSON.stringify(policies)}; pass --policy`);
    }
    policy = policies[0];
  }
  const fit = report.fits[policy];
  if (fit === undefined) {
    throw new Error(`policy "${policy}" not in rate report (${JSON.stringify(policies)})`);
  }
  const sub = rows.filter((r) => r.policy === policy);
  if (sub.length === 0) {
    throw new Error(`policy "${policy}" not in ${mediansPath}`);
  }
  const metricColumn =
    report.metric === "realized"
      ? "median_final_regret_realized"
      : "median_final_regret_analytic";
  const horizons = numeric(sub, "T");
  const regrets = numeric(sub, metricColumn);
  const points = horizons.map((T, i) => [T, regrets[i]] as [number, number]);

  const series: ChartOption["series"] = [
    { name: `${policy} medians`, type: "scatter", symbolSize: 9, data: points },
    {
      name: `fitted slope ${formatSlope(fit.slope)}`,
      type: "line",
      showSymbol: false,
      data: powerLawPoints(fit.slope, fit.intercept, horizons),
    },
  ];
  const annotations = [`fitted slope ${formatSlope(fit.slope)}`];
  const reference = refExponent ?? fit.theoretical_exponent ?? undefined;
  if (reference !== undefined && reference !== null) {
    // anchor the reference line at the first fitted point
    const anchorY = Math.exp(fit.intercept + fit.slope * Math.log(horizons[0]));
    const refIntercept = Math.log(anchorY) - reference * Math.log(horizons[0]);
    series.push({
      name: `reference slope ${formatSlope(reference)}`,
      type: "line",
      showSymbol: false,
      lineStyle: { type: "dashed" },
      data: powerLawPoints(reference, refIntercept, horizons),
    });
    annotations.push(`reference slope ${formatSlope(reference)}`);
  }
  return {
    option: {
      title: { text: `Regret rate: ${policy} (${report.metric})`, left: "center" },
      legend: { bottom: 0 },
      xAxis: { type: "log", name: "horizon T" },
      yAxis: { type: "log", name: "median final regret" },
      series,
      graphic: annotationGraphic(annotations),
    },
    annotations,
  };
}

/** Estimator error against sample size on log-log axes (optional bound column). */
export function buildEstimatorError(csvPath: string, refExponent?: number): BuiltPlot {
  const rows = readCsv(csvPath, ESTIMATOR_ERROR_COLUMNS);
  const n = numeric(rows, "n");
  const err = numeric(rows, "error");
  const series: ChartOption["series"] = [
    {
      name: "measured error",
      type: "line",
      data: n.map((x, i) => [x, err[i]] as [number, number]),
    },
  ];
  const annotations: string[] = [];
  if (rows.length > 0 && rows[0].bound !== undefined) {
    const bound = numeric(rows, "bound");
    series.push({
      name: "deviation bound",
      type: "line",
      lineStyle: { type: "dashed" },
      data: n.map((x, i) => [x, bound[i]] as [number, number]),
    });
  }
  if (refExponent !== undefined) {
    const anchor = err[0] ?? 1;
    const refIntercept = Math.log(anchor) - refExponent * Math.log(n[0]);
    series.push({
      name: `reference slope ${formatSlope(refExponent)}`,
      type: "line",
      showSymbol: false,
      lineStyle: { type: "dotted" },
      data: powerLawPoints(refExponent, refIntercept, n),
    });
    annotations.push(`reference slope ${formatSlope(refExponent)}`);
  }
  return {
    option: {
      title: { text: "Estimator error scaling", left: "center" },
      legend: { bottom: 0 },
      xAxis: { type: "log", name: "sample size n" },
      yAxis: { type: "log", name: "error" },
      series,
      graphic: annotationGraphic(annotations),
    },
    annotations,
  };
}

/**
 * KL divergence of the hard pair against the mean gap on log-log axes. The
 * slope annotation passes through the report's value when a JSON is supplied.
 */
export function buildKlSweep(csvPath: string, reportPath?: string): BuiltPlot {
  const rows = readCsv(csvPath, KL_SWEEP_COLUMNS);
  const eps = numeric(rows, "epsilon");
  const zip = (col: string) =>
    numeric(rows, col).map((y, i) => [eps[i], y] as [number, number]);
  const annotations: string[] = [];
  if (reportPath !== undefined) {
    const report = readJson<LowerBoundReport>(reportPath);
    annotations.push(`fitted slope ${formatSlope(report.kl_sweep_slope)}`);
    annotations.push(`theory p/(p-1) ${formatSlope(report.kl_exponent_theory)}`);
  }
  return {
    option: {
      title: { text: "KL divergence vs mean gap", left: "center" },
      legend: { bottom: 0 },
      xAxis: { type: "log", name: "mean gap" },
      yAxis: { type: "log", name: "KL divergence" },
      series: [
        { name: "atomic", type: "line", data: zip("kl_atomic") },
        { name: "smoothed", type: "line", lineStyle: { type: "dashed" }, data: zip("kl_smoothed") },
        { name: "joint (V,W)", type: "line", data: zip("kl_joint") },
      ],
      graphic: annotationGraphic(annotations),
    },
    annotations,
  };
}
