/** Hand-rolled SVG scene builder: deterministic output, no dependencies. */

export interface Margins {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

const FMT = (v: number): string => {
  if (!Number.isFinite(v)) {
    return "0";
  }
  return Number(v.toFixed(3)).toString();
};

export class Scale {
  constructor(
    readonly domainMin: number,
    readonly domainMax: number,
    readonly rangeMin: number,
    readonly rangeMax: number,
    readonly log: boolean = false,
  ) {}

  at(v: number): number {
    const [d0, d1] = this.log
      ? [Math.log(this.domainMin), Math.log(this.domainMax)]
      : [this.domainMin, this.domainMax];
    const x = this.log ? Math.log(v) : v;
    const t = d1 === d0 ? 0.5 : (x - d0) / (d1 - d0);
    return this.rangeMin + t * (this.rangeMax - this.rangeMin);
  }

  ticks(count = 5): number[] {
    if (this.log) {
      const lo = Math.floor(Math.log10(this.domainMin));
      const hi = Math.ceil(Math.log10(this.domainMax));
      const out: number[] = [];
      for (let e = lo; e <= hi; e++) {
        for (const m of [1, 2, 5]) {
          const v = m * 10 ** e;
          if (v >= this.domainMin * 0.999 && v <= this.domainMax * 1.001) {
            out.push(v);
          }
        }
      }
      if (out.length === 0) {
        out.push(this.domainMin, this.domainMax);
      }
      return out;
    }
    const span = this.domainMax - this.domainMin;
    if (span <= 0) {
      return [this.domainMin];
    }
    const step = 10 ** Math.floor(Math.log10(span / count));
    const mult = span / count / step >= 5 ? 5 : span / count / step >= 2 ? 2 : 1;
    const s = step * mult;
    const start = Math.ceil(this.domainMin / s) * s;
    const out: number[] = [];
    for (let v = start; v <= this.domainMax + 1e-9; v += s) {
      out.push(Number(v.toPrecision(12)));
    }
    return out;
  }
}

export class SvgCanvas {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1, dash?: string): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${FMT(x1)}" y1="${FMT(y1)}" x2="${FMT(x2)}" y2="${FMT(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  polyline(points: [number, number][], stroke: string, width = 1.5): void {
    const p = points.map(([x, y]) => `${FMT(x)},${FMT(y)}`).join(" ");
    this.parts.push(`<polyline points="${p}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`);
  }

  polygon(points: [number, number][], fill: string, opacity: number): void {
    const p = points.map(([x, y]) => `${FMT(x)},${FMT(y)}`).join(" ");
    this.parts.push(`<polygon points="${p}" fill="${fill}" fill-opacity="${FMT(opacity)}" stroke="none"/>`);
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(`<circle cx="${FMT(x)}" cy="${FMT(y)}" r="${FMT(r)}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, opts: { anchor?: string; size?: number; fill?: string } = {}): void {
    const anchor = opts.anchor ?? "start";
    const size = opts.size ?? 12;
    const fill = opts.fill ?? "#222";
    this.parts.push(
      `<text x="${FMT(x)}" y="${FMT(y)}" text-anchor="${anchor}" font-size="${size}" font-family="sans-serif" fill="${fill}">${escapeXml(content)}</text>`,
    );
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect width="${this.width}" height="${this.height}" fill="white"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

export function axes(
  canvas: SvgCanvas,
  xScale: Scale,
  yScale: Scale,
  margins: Margins,
  xLabel: string,
  yLabel: string,
  tickFormat: (v: number) => string = (v) => Number(v.toPrecision(6)).toString(),
): void {
  const x0 = margins.left;
  const x1 = canvas.width - margins.right;
  const y0 = canvas.height - margins.bottom;
  const y1 = margins.top;
  canvas.line(x0, y0, x1, y0, "#222");
  canvas.line(x0, y0, x0, y1, "#222");
  for (const t of xScale.ticks()) {
    const px = xScale.at(t);
    canvas.line(px, y0, px, y0 + 5, "#222");
    canvas.text(px, y0 + 18, tickFormat(t), { anchor: "middle", size: 11 });
  }
  for (const t of yScale.ticks()) {
    const py = yScale.at(t);
    canvas.line(x0 - 5, py, x0, py, "#222");
    canvas.line(x0, py, x1, py, "#eee");
    canvas.text(x0 - 8, py + 4, tickFormat(t), { anchor: "end", size: 11 });
  }
  canvas.text((x0 + x1) / 2, canvas.height - 8, xLabel, { anchor: "middle" });
  canvas.text(14, (y0 + y1) / 2, yLabel, { anchor: "middle" });
}

export function legend(canvas: SvgCanvas, entries: [string, string][], x: number, y: number): void {
  entries.forEach(([label, color], i) => {
    const yy = y + i * 18;
    canvas.line(x, yy - 4, x + 22, yy - 4, color, 2.5);
    canvas.text(x + 28, yy, label, { size: 12 });
  });
}
