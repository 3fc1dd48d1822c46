/**
 * Column schemas of the flat files the simulator emits. This tool reads only
 * these documented formats; it never calls the simulator itself.
 */

export const TRACE_COLUMNS = [
  "t",
  "epoch",
  "price",
  "v",
  "w",
  "delta",
  "inst_regret_analytic",
  "cum_regret_analytic",
  "inst_regret_realized",
  "cum_regret_realized",
] as const;

export const MEDIANS_COLUMNS = [
  "policy",
  "T",
  "n_replications",
  "median_final_regret_analytic",
  "median_final_regret_realized",
] as const;

export const ESTIMATOR_ERROR_COLUMNS = ["n", "error"] as const; // optional: bound

export const KL_SWEEP_COLUMNS = [
  "epsilon",
  "kl_atomic",
  "kl_smoothed",
  "kl_joint",
] as const;

export type PlotKind = "regret-curve" | "rate-fit" | "estimator-error" | "kl-sweep";

export const PLOT_KINDS: PlotKind[] = [
  "regret-curve",
  "rate-fit",
  "estimator-error",
  "kl-sweep",
];

/** Shape of the rate_fit.json report produced by the fit-rate command. */
export interface RateFitReport {
  metric: string;
  fits: Record<
    string,
    {
      horizons: number[];
      regrets: number[];
      slope: number;
      intercept: number;
      stderr: number;
      residuals: number[];
      theoretical_exponent: number | null;
    }
  >;
}

/** Shape of the lowerbound.json report (only the fields this tool reads). */
export interface LowerBoundReport {
  kl_sweep_slope: number;
  kl_exponent_theory: number;
}
