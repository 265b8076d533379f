export function mean(values: number[]): number {
    return values.reduce((a, b) => a + b, 0) / values.length;
}

export function stdDev(values: number[]): number {
    const m = mean(values);
    return Math.sqrt(mean(values.map(v => (v - m) * (v - m))));
}

export interface KdePoint {
    x: number;
    density: number;
}

/**
 * Gaussian kernel density over an evenly spaced grid.
 *
 * Bandwidth follows Silverman's rule; a degenerate sample (zero spread)
 * returns a single spike so callers can draw a flat marker instead.
 */
export function gaussianKde(values: number[], points = 64): KdePoint[] {
    const sd = stdDev(values);
    if (sd === 0 || values.length < 2) {
        return [{ x: values[0] ?? 0, density: 1 }];
    }
    const bandwidth = 1.06 * sd * Math.pow(values.length, -0.2);
    const lo = Math.min(...values) - 2 * bandwidth;
    const hi = Math.max(...values) + 2 * bandwidth;
    const step = (hi - lo) / (points - 1);
    const norm = 1 / (values.length * bandwidth * Math.sqrt(2 * Math.PI));
    const grid: KdePoint[] = [];
    for (let i = 0; i < points; i++) {
        const x = lo + i * step;
        let density = 0;
        for (const v of values) {
            const z = (x - v) / bandwidth;
            density += Math.exp(-0.5 * z * z);
        }
        grid.push({ x, density: density * norm });
    }
    return grid;
}
