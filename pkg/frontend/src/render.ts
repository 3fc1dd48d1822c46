import fs from "node:fs";
import path from "node:path";

import type { LineSeriesOption, ScatterSeriesOption } from "echarts/charts";
import { LineChart, ScatterChart } from "echarts/charts";
import type {
  GraphicComponentOption,
  GridComponentOption,
  LegendComponentOption,
  TitleComponentOption,
  TooltipComponentOption,
} from "echarts/components";
import {
  GraphicComponent,
  GridComponent,
  LegendComponent,
  TitleComponent,
  TooltipComponent,
} from "echarts/components";
import * as echarts from "echarts/core";
import { SVGRenderer } from "echarts/renderers";

echarts.use([
  LineChart,
  ScatterChart,
  GraphicComponent,
  GridComponent,
  LegendComponent,
  TitleComponent,
  TooltipComponent,
  SVGRenderer,
]);

export type ChartOption = echarts.ComposeOption<
  | LineSeriesOption
  | ScatterSeriesOption
  | GraphicComponentOption
  | GridComponentOption
  | LegendComponentOption
  | TitleComponentOption
  | TooltipComponentOption
>;

export interface RenderOptions {
  width?: number;
  height?: number;
}

/**
 * zrender mints CSS class names from process-global counters (zr<N>-cls-<M>),
 * so two renders of the same option differ in those tokens alone. Renaming
 * them in order of first appearance (element markup and <style> rules hit the
 * same regex, keeping references consistent) makes output byte-stable.
 */
function canonicalizeClassNames(svg: string): string {
  const seen = new Map<string, string>();
  return svg.replace(/zr\d+-(cls|c)-?(\d+)/g, (token, kind: string) => {
    let canonical = seen.get(token);
    if (canonical === undefined) {
      canonical = `zr-${kind}-${seen.size}`;
      seen.set(token, canonical);
    }
    return canonical;
  });
}

/**
 * Server-side render to an SVG string. Animation is disabled and class names
 * canonicalized so identical inputs produce identical bytes.
 */
export function renderSvg(option: ChartOption, opts: RenderOptions = {}): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: opts.width ?? 900,
    height: opts.height ?? 600,
  });
  try {
    chart.setOption({ animation: false, ...option });
    return canonicalizeClassNames(chart.renderToSVGString());
  } finally {
    chart.dispose();
  }
}

/** Write the figure; only .svg output is supported in this headless build. */
export function writeFigure(outPath: string, svg: string): void {
  const ext = path.extname(outPath).toLowerCase();
  if (ext !== ".svg") {
    throw new Error(
      `unsupported output format "${ext}": this tool renders SVG only ` +
      `(no canvas backend in headless node); use a .svg path`,
    );
  }
  fs.mkdirSync(path.dirname(path.resolve(outPath)), { recursive: true });
  fs.writeFileSync(outPath, svg);
}
