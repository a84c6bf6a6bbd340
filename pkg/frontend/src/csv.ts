import type { RankRecord } from "./types.js";

const EXPECTED_HEADER = [
  "city",
  "date",
  "solar_irradiance",
  "temperature",
  "wind_speed",
  "aod",
  "land_cover_class",
  "water_proximity",
  "elevation",
  "month",
];

export class CsvError extends Error {
  constructor(
    message: string,
    readonly row: number,
  ) {
    super(message);
    this.name = "CsvError";
  }
}

function splitLine(line: string): string[] {
  // Minimal CSV splitting with double-quote support (the canonical format
  // only quotes city names containing commas).
  const cells: string[] = [];
  let current = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') {
          current += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        current += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      cells.push(current);
      current = "";
    } else {
      current += ch;
    }
  }
  cells.push(current);
  return cells;
}

function parseNumber(cell: string, row: number, column: string): number {
  const value = Number(cell);
  if (cell.trim() === "" || !Number.isFinite(value)) {
    throw new CsvError(`row ${row}: column '${column}' is not numeric: '${cell}'`, row);
  }
  return value;
}

/** Parse the canonical dataset CSV into rank-request records. */
export function parseDatasetCsv(text: string): RankRecord[] {
  const lines = text.split(/\r?\n/).filter((line, i) => line.length > 0 || i === 0);
  if (lines.length === 0 || lines[0].trim() === "") {
    throw new CsvError("empty file", 0);
  }
  const header = splitLine(lines[0]);
  for (let i = 0; i < EXPECTED_HEADER.length; i++) {
    if (header[i] !== EXPECTED_HEADER[i]) {
      throw new CsvError(
        `header column ${i + 1}: expected '${EXPECTED_HEADER[i]}', got '${header[i] ?? ""}'`,
        1,
      );
    }
  }
  const records: RankRecord[] = [];
  for (let i = 1; i < lines.length; i++) {
    const row = i + 1;
    const cells = splitLine(lines[i]);
    if (cells.length !== EXPECTED_HEADER.length) {
      throw new CsvError(`row ${row}: expected ${EXPECTED_HEADER.length} cells, got ${cells.length}`, row);
    }
    records.push({
      city: cells[0],
      date: cells[1],
      solar_irradiance: parseNumber(cells[2], row, "solar_irradiance"),
      temperature: parseNumber(cells[3], row, "temperature"),
      wind_speed: parseNumber(cells[4], row, "wind_speed"),
      aod: cells[5] === "" ? null : parseNumber(cells[5], row, "aod"),
      land_cover_class: parseNumber(cells[6], row, "land_cover_class"),
      water_proximity: parseNumber(cells[7], row, "water_proximity"),
      elevation: parseNumber(cells[8], row, "elevation"),
      month: parseNumber(cells[9], row, "month"),
    });
  }
  return records;
}
