import { EnvelopeView } from "./api.js";

// Envelope chart, plain SVG: the generated distribution is drawn as a
// min-max band with a quartile band and median line inside it, and the
// real reference series is a distinct line on top.

const WIDTH = 640;
const HEIGHT = 280;
const PAD = { left: 48, right: 12, top: 12, bottom: 24 };

interface Scale {
  x(i: number): number;
  y(v: number): number;
}

function makeScale(view: EnvelopeView): Scale {
  const n = Math.max(view.real.length, view.envelope.min.length);
  const all = [
    ...view.real,
    ...view.envelope.min,
    ...view.envelope.max,
  ];
  let lo = Math.min(...all);
  let hi = Math.max(...all);
  if (!(hi > lo)) {
    // flat data still needs a visible band
    lo -= 0.5;
    hi += 0.5;
  }
  const innerW = WIDTH - PAD.left - PAD.right;
  const innerH = HEIGHT - PAD.top - PAD.bottom;
  const denom = Math.max(n - 1, 1);
  return {
    x: (i) => PAD.left + (i / denom) * innerW,
    y: (v) => PAD.top + ((hi - v) / (hi - lo)) * innerH,
  };
}

const fmt = (v: number) => (Math.round(v * 100) / 100).toString();

function linePoints(values: number[], s: Scale): string {
  return values.map((v, i) => `${fmt(s.x(i))},${fmt(s.y(v))}`).join(" ");
}

// Closed polygon: upper edge left to right, lower edge right to left.
function bandPoints(upper: number[], lower: number[], s: Scale): string {
  const up = upper.map((v, i) => `${fmt(s.x(i))},${fmt(s.y(v))}`);
  const down = lower.map((v, i) => `${fmt(s.x(i))},${fmt(s.y(v))}`).reverse();
  return [...up, ...down].join(" ");
}

export function renderEnvelope(root: HTMLElement, view: EnvelopeView): SVGSVGElement {
  const doc = root.ownerDocument;
  const SVG_NS = "http://www.w3.org/2000/svg";
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "envelope");
  svg.setAttribute("role", "img");

  const s = makeScale(view);
  const shape = (tag: string, cls: string, points: string) => {
    const el = doc.createElementNS(SVG_NS, tag);
    el.setAttribute("class", cls);
    el.setAttribute("points", points);
    svg.appendChild(el);
    return el;
  };

  shape("polygon", "band-minmax", bandPoints(view.envelope.max, view.envelope.min, s));
  shape("polygon", "band-quartile", bandPoints(view.envelope.q75, view.envelope.q25, s));
  shape("polyline", "line-median", linePoints(view.envelope.median, s));
  shape("polyline", "line-real", linePoints(view.real, s));

  const caption = doc.createElementNS(SVG_NS, "text");
  caption.setAttribute("x", String(PAD.left));
  caption.setAttribute("y", String(HEIGHT - 6));
  caption.setAttribute("class", "caption");
  caption.textContent =
    `${view.metric}: real ${view.real_log} vs ${view.count} generated`;
  svg.appendChild(caption);

  root.textContent = "";
  root.appendChild(svg);
  return svg;
}

export function renderEnvelopeMissing(root: HTMLElement, message: string): void {
  root.textContent = "";
  const p = root.ownerDocument.createElement("p");
  p.className = "empty-state";
  p.textContent = message;
  root.appendChild(p);
}
