export { convergencePaths, deviationViolin, payoffBars } from "./charts";
export {
    SchemaMismatchError,
    parseCsv,
    readSamples,
    readSeries,
    readSummary,
} from "./csv";
export type { SampleRow, SeriesRow, SummaryRow } from "./csv";
export { gaussianKde, mean, stdDev } from "./stats";
export { rulebreakTable } from "./table";
export { main } from "./cli";
