/** Minimal deterministic SVG assembly: no DOM, no randomness, plain strings. */

export const PALETTE = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

export function escapeXml(text: string): string {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

export function fmt(value: number): string {
    return Number(value.toFixed(3)).toString();
}

export interface Scale {
    (value: number): number;
    domain: [number, number];
}

/** Linear map from [d0, d1] to [r0, r1]; constant domains map to the middle. */
export function linearScale(domain: [number, number], range: [number, number]): Scale {
    const [d0, d1] = domain;
    const [r0, r1] = range;
    const span = d1 - d0;
    const scale = ((value: number) =>
        span === 0 ? (r0 + r1) / 2 : r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
    scale.domain = domain;
    return scale;
}

/** Round ticks covering the domain, at most `count` of them. */
export function niceTicks(domain: [number, number], count = 5): number[] {
    const [lo, hi] = domain;
    if (lo === hi) {
        return [lo];
    }
    const rawStep = (hi - lo) / count;
    const magnitude = Math.pow(10, Math.floor(Math.log10(rawStep)));
    const candidates = [1, 2, 2.5, 5, 10].map(m => m * magnitude);
    const step = candidates.find(c => c >= rawStep) ?? candidates[candidates.length - 1];
    const start = Math.ceil(lo / step) * step;
    const ticks: number[] = [];
    for (let v = start; v <= hi + step * 1e-9; v += step) {
        ticks.push(Number(v.toFixed(10)));
    }
    return ticks;
}

export class SvgDoc {
    private parts: string[] = [];

    constructor(readonly width: number, readonly height: number) {}

    push(element: string): void {
        this.parts.push(element);
    }

    line(x1: number, y1: number, x2: number, y2: number, attrs = ""): void {
        this.push(`<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ${attrs}/>`);
    }

    rect(x: number, y: number, w: number, h: number, attrs = ""): void {
        this.push(`<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ${attrs}/>`);
    }

    path(d: string, attrs = ""): void {
        this.push(`<path d="${d}" ${attrs}/>`);
    }

    text(x: number, y: number, content: string, attrs = ""): void {
        this.push(
            `<text x="${fmt(x)}" y="${fmt(y)}" font-family="sans-serif" ${attrs}>${escapeXml(content)}</text>`,
        );
    }

    render(): string {
        return [
            `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
            `<rect x="0" y="0" width="${this.width}" height="${this.height}" fill="white"/>`,
            ...this.parts,
            "</svg>",
        ].join("\n");
    }
}

export interface Frame {
    left: number;
    right: number;
    top: number;
    bottom: number;
}

export function drawYAxis(doc: SvgDoc, frame: Frame, scale: Scale, label: string): void {
    doc.line(frame.left, frame.top, frame.left, frame.bottom, 'stroke="black"');
    for (const tick of niceTicks(scale.domain)) {
        const y = scale(tick);
        doc.line(frame.left - 4, y, frame.left, y, 'stroke="black" class="y-tick"');
        doc.text(frame.left - 8, y + 3, fmt(tick), 'text-anchor="end" font-size="10"');
    }
    doc.text(12, (frame.top + frame.bottom) / 2, label, 'font-size="11" transform="rotate(-90 12 ' +
        fmt((frame.top + frame.bottom) / 2) + ')" text-anchor="middle"');
}
