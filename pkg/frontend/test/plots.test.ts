import fs from "node:fs";
import os from "node:os";
import path from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import { numeric, readCsv } from "../src/csv.js";
import { logLogSlope } from "../src/fit.js";
import { buildPlot, run } from "../src/cli.js";
import { formatSlope } from "../src/plots.js";
import { renderSvg, writeFigure } from "../src/render.js";
import { RateFitReport } from "../src/schema.js";

const FIX = path.join(__dirname, "fixtures");
const fixture = (name: string) => path.join(FIX, name);

let outDir: string;

beforeAll(() => {
  outDir = fs.mkdtempSync(path.join(os.tmpdir(), "heavytrade-plots-"));
});

describe("the four plot kinds render from fixtures", () => {
  const cases: [string, string[]][] = [
    ["regret-curve", [fixture("trace_robust_T512_r0.csv")]],
    ["rate-fit", [fixture("medians.csv"), fixture("rate_fit.json")]],
    ["estimator-error", [fixture("estimator_error.csv")]],
    ["kl-sweep", [fixture("kl_sweep.csv"), fixture("lowerbound.json")]],
  ];

  for (const [kind, inputs] of cases) {
    it(`renders ${kind}`, () => {
      const out = path.join(outDir, `${kind}.svg`);
      const code = run([
        "--kind", kind, "--in", ...inputs, "--out", out,
        ...(kind === "rate-fit" ? ["--policy", "robust"] : []),
      ]);
      expect(code).toBe(0);
      const svg = fs.readFileSync(out, "utf-8");
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg).toContain("</svg>");
    });
  }
});

describe("rate-fit slope annotation", () => {
  it("passes the harness-fitted slope through verbatim (1e-9)", () => {
    const report = JSON.parse(
      fs.readFileSync(fixture("rate_fit.json"), "utf-8"),
    ) as RateFitReport;
    const plot = buildPlot("rate-fit", [fixture("medians.csv"), fixture("rate_fit.json")], {
      policy: "robust",
    });
    const line = plot.annotations.find((a) => a.startsWith("fitted slope"));
    expect(line).toBeDefined();
    const annotated = Number(line!.replace("fitted slope ", ""));
    expect(Math.abs(annotated - report.fits.robust.slope)).toBeLessThanOrEqual(1e-9);
    // and the annotation text itself lands in the SVG
    const svg = renderSvg(plot.option);
    expect(svg).toContain(formatSlope(report.fits.robust.slope));
  });

  it("agrees with an independent least-squares fit of the medians", () => {
    const rows = readCsv(fixture("medians.csv"), ["policy", "T"]).filter(
      (r) => r.policy === "robust",
    );
    const fit = logLogSlope(numeric(rows, "T"), numeric(rows, "median_final_regret_analytic"));
    const report = JSON.parse(
      fs.readFileSync(fixture("rate_fit.json"), "utf-8"),
    ) as RateFitReport;
    expect(Math.abs(fit.slope - report.fits.robust.slope)).toBeLessThanOrEqual(1e-9);
  });
});

describe("kl-sweep annotation", () => {
  it("passes the report slope through and matches a direct fit", () => {
    const plot = buildPlot("kl-sweep", [fixture("kl_sweep.csv"), fixture("lowerbound.json")], {});
    const line = plot.annotations.find((a) => a.startsWith("fitted slope"));
    expect(line).toBeDefined();
    const annotated = Number(line!.replace("fitted slope ", ""));
    const report = JSON.parse(fs.readFileSync(fixture("lowerbound.json"), "utf-8"));
    expect(Math.abs(annotated - report.kl_sweep_slope)).toBeLessThanOrEqual(1e-9);
    const rows = readCsv(fixture("kl_sweep.csv"), ["epsilon", "kl_smoothed"]);
    const direct = logLogSlope(numeric(rows, "epsilon"), numeric(rows, "kl_smoothed"));
    expect(Math.abs(direct.slope - report.kl_sweep_slope)).toBeLessThanOrEqual(1e-9);
  });
});

describe("determinism and error handling", () => {
  it("identical inputs render identical bytes", () => {
    const plot = buildPlot("regret-curve", [fixture("trace_robust_T512_r0.csv")], {});
    expect(renderSvg(plot.option)).toBe(renderSvg(plot.option));
  });

  it("schema mismatch names the missing column", () => {
    const bad = path.join(outDir, "bad.csv");
    fs.writeFileSync(bad, "epsilon,kl_atomic\n0.1,0.2\n");
    expect(() => buildPlot("kl-sweep", [bad], {})).toThrow(/missing column "kl_smoothed"/);
  });

  it("rejects non-svg output paths", () => {
    expect(() => writeFigure(path.join(outDir, "x.png"), "<svg/>")).toThrow(/SVG only/);
  });

  it("rejects unknown policies", () => {
    expect(() =>
      buildPlot("rate-fit", [fixture("medians.csv"), fixture("rate_fit.json")], {
        policy: "nope",
      }),
    ).toThrow(/not in rate report/);
  });

  it("rate-fit with several policies requires --policy", () => {
    expect(() =>
      buildPlot("rate-fit", [fixture("medians.csv"), fixture("rate_fit.json")], {}),
    ).toThrow(/pass --policy/);
  });
});
