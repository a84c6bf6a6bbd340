import { ApiClient, ServiceError } from "./api.js";
import { CsvError, parseDatasetCsv } from "./csv.js";
import {
  gaugeGeometry,
  probabilityBars,
  shapBars,
  shapSum,
  sortRankings,
  totalHistogram,
  type RankSortKey,
} from "./render.js";
import { ScenarioScheduler } from "./scheduler.js";
import {
  FEATURE_NAMES,
  type CityRanking,
  type FeatureName,
  type MetaResponse,
  type ScenarioPayload,
  type ScenarioResponse,
} from "./types.js";

const FEATURE_TITLES: Record<FeatureName, string> = {
  solar_irradiance: "Solar irradiance (kWh/m2/day)",
  temperature: "Temperature (degC)",
  wind_speed: "Wind speed (m/s)",
  aod: "Aerosol optical depth",
  land_cover_class: "Land cover class",
  water_proximity: "Water proximity (km)",
  elevation: "Elevation (m)",
  month: "Month",
};

export interface AppHandle {
  payload(): ScenarioPayload;
  setFeature(name: FeatureName, value: number): void;
  lastResponse(): ScenarioResponse | null;
  loadRankingCsv(text: string): Promise<void>;
  meta: MetaResponse;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function landCoverOptions(min: number, max: number): number[] {
  const lo = Math.round(min);
  const hi = Math.round(max);
  const codes = new Set<number>([lo, hi]);
  for (let code = Math.ceil(lo / 10) * 10; code <= hi; code += 10) codes.add(code);
  return [...codes].sort((a, b) => a - b);
}

export async function initApp(
  root: HTMLElement,
  client: ApiClient,
  debounceMs = 150,
): Promise<AppHandle> {
  const meta = await client.meta();
  const importance = await client.importance();

  root.textContent = "";
  const banner = el("div", "banner hidden");
  root.append(banner);

  const layout = el("div", "layout");
  root.append(layout);

  // --- scenario builder -----------------------------------------------
  const formPanel = el("section", "panel");
  formPanel.append(el("h2", "", "Scenario builder"));
  layout.append(formPanel);

  const payload = {} as ScenarioPayload;
  const readouts = new Map<FeatureName, HTMLElement>();
  const inputs = new Map<FeatureName, HTMLInputElement | HTMLSelectElement>();

  const scheduler = new ScenarioScheduler(
    (p) => client.scenario(p),
    (result) => {
      hideBanner();
      renderExplanation(result);
    },
    (error) => showBanner(error),
    debounceMs,
  );

  function showBanner(error: Error): void {
    const detail =
      error instanceof ServiceError && error.fields.length > 0
        ? `invalid fields: ${error.fields.join(", ")}`
        : error.message;
    banner.textContent = `Service error - showing last good result. ${detail}`;
    banner.classList.remove("hidden");
  }

  function hideBanner(): void {
    banner.classList.add("hidden");
  }

  function announceChange(): void {
    scheduler.change({ ...payload });
  }

  for (const name of FEATURE_NAMES) {
    const range = meta.scaling[name] ?? { min: 0, max: 1 };
    const row = el("label", "control");
    row.append(el("span", "control-name", FEATURE_TITLES[name]));

    let control: HTMLInputElement | HTMLSelectElement;
    if (name === "month") {
      const select = el("select");
      for (let m = 1; m <= 12; m++) {
        const option = el("option", "", String(m));
        option.value = String(m);
        select.append(option);
      }
      const initial = Math.min(12, Math.max(1, Math.round((range.min + range.max) / 2)));
      select.value = String(initial);
      payload[name] = initial;
      control = select;
    } else if (name === "land_cover_class") {
      const select = el("select");
      const codes = landCoverOptions(range.min, range.max);
      for (const code of codes) {
        const option = el("option", "", String(code));
        option.value = String(code);
        select.append(option);
      }
      select.value = String(codes[0]);
      payload[name] = codes[0];
      control = select;
    } else {
      const slider = el("input");
      slider.type = "range";
      const span = range.max - range.min;
      slider.min = String(range.min);
      slider.max = String(range.max);
      slider.step = span > 0 ? String(span / 100) : "1";
      if (span === 0) slider.disabled = true;
      const initial = range.min + span / 2;
      slider.value = String(initial);
      payload[name] = initial;
      control = slider;
    }
    control.setAttribute("data-feature", name);
    control.addEventListener("input", () => {
      payload[name] = Number(control.value);
      readout.textContent = String(payload[name]);
      announceChange();
    });
    inputs.set(name, control);
    row.append(control);
    const readout = el("span", "control-value", String(payload[name]));
    readouts.set(name, readout);
    row.append(readout);
    formPanel.append(row);
  }

  // --- explanation widget ----------------------------------------------
  const explainPanel = el("section", "panel");
  layout.append(explainPanel);
  explainPanel.append(el("h2", "", "Prediction"));
  const classBadge = el("div", "class-badge", "-");
  explainPanel.append(classBadge);
  const probList = el("div", "prob-bars");
  explainPanel.append(probList);

  explainPanel.append(el("h2", "", "Why (Shapley values)"));
  const baselineNote = el("div", "baseline-note");
  explainPanel.append(baselineNote);
  const shapList = el("div", "shap-bars");
  explainPanel.append(shapList);
  const sumNote = el("div", "sum-note");
  explainPanel.append(sumNote);

  explainPanel.append(el("h2", "", "Suitability index"));
  const gauge = el("div", "gauge");
  const gaugeTrack = el("div", "gauge-track");
  gauge.append(gaugeTrack);
  const sciValue = el("span", "sci-value", "-");
  const sciClass = el("span", "sci-class", "");
  const sciLine = el("div", "sci-line");
  sciLine.append(el("span", "", "SCI = "), sciValue, el("span", "", " "), sciClass);
  explainPanel.append(sciLine, gauge);

  let last: ScenarioResponse | null = null;

  function renderExplanation(response: ScenarioResponse): void {
    last = response;
    classBadge.textContent = response.proxy_label;

    probList.textContent = "";
    for (const bar of probabilityBars(response.probabilities, meta.class_labels)) {
      const row = el("div", "prob-row");
      row.append(el("span", "prob-label", bar.label));
      const track = el("div", "bar-track");
      const fill = el("div", "bar-fill");
      fill.style.width = `${bar.widthPct}%`;
      track.append(fill);
      row.append(track);
      row.append(el("span", "prob-value", bar.probability.toFixed(3)));
      probList.append(row);
    }

    baselineNote.textContent = `baseline (mean background margin): ${response.shap_baseline}`;
    shapList.textContent = "";
    for (const bar of shapBars(response.shap)) {
      const row = el("div", "shap-row");
      row.append(el("span", "shap-label", bar.name));
      const track = el("div", "shap-track");
      const fill = el("div", bar.positive ? "shap-fill positive" : "shap-fill negative");
      fill.style.width = `${bar.widthPct}%`;
      fill.style[bar.positive ? "left" : "right"] = "50%";
      track.append(fill);
      const mid = el("div", "shap-midline");
      track.append(mid);
      row.append(track);
      row.append(el("span", "shap-value", bar.value.toExponential(3)));
      shapList.append(row);
    }
    sumNote.textContent = `sum of bars = ${shapSum(response)} (margin - baseline)`;

    sciValue.textContent = String(response.sci);
    sciClass.textContent = response.sci_class;
    gaugeTrack.textContent = "";
    const geometry = gaugeGeometry(response.sci, meta.bins);
    for (const cut of geometry.cuts) {
      const tick = el("div", "gauge-cut");
      tick.style.left = `${cut.pct}%`;
      tick.title = String(cut.value);
      gaugeTrack.append(tick);
    }
    const needle = el("div", "gauge-needle");
    needle.style.left = `${geometry.valuePct}%`;
    gaugeTrack.append(needle);
  }

  // --- global importance -------------------------------------------------
  const importancePanel = el("section", "panel");
  importancePanel.append(el("h2", "", "Global importance (mean |SHAP|)"));
  const importanceList = el("div", "importance");
  const peak = Math.max(...importance.features.map((f) => f.mean_abs_shap), 1e-12);
  for (const feature of importance.features) {
    const row = el("div", "prob-row");
    row.append(el("span", "prob-label", feature.name));
    const track = el("div", "bar-track");
    const fill = el("div", "bar-fill importance-fill");
    fill.style.width = `${(feature.mean_abs_shap / peak) * 100}%`;
    track.append(fill);
    row.append(track);
    row.append(el("span", "prob-value", feature.mean_abs_shap.toFixed(4)));
    importanceList.append(row);
  }
  importancePanel.append(importanceList);
  layout.append(importancePanel);

  // --- city ranking --------------------------------------------------------
  const rankPanel = el("section", "panel");
  rankPanel.append(el("h2", "", "City ranking"));
  const fileInput = el("input");
  fileInput.type = "file";
  fileInput.accept = ".csv,text/csv";
  rankPanel.append(fileInput);
  const rankError = el("div", "rank-error hidden");
  rankPanel.append(rankError);
  const rankTable = el("table", "rank-table");
  rankPanel.append(rankTable);
  const histogramBox = el("div", "histogram");
  rankPanel.append(histogramBox);
  layout.append(rankPanel);

  let rankings: CityRanking[] = [];
  let sortKey: RankSortKey = "mean_sci";
  let sortDescending = true;

  function renderRanking(): void {
    rankTable.textContent = "";
    const head = el("tr");
    const columns: [RankSortKey, string][] = [
      ["city", "City"],
      ["mean_sci", "Mean SCI"],
      ["modal_class", "Modal class"],
    ];
    for (const [key, title] of columns) {
      const th = el("th", "", title + (sortKey === key ? (sortDescending ? " v" : " ^") : ""));
      th.addEventListener("click", () => {
        if (sortKey === key) sortDescending = !sortDescending;
        else {
          sortKey = key;
          sortDescending = key === "mean_sci";
        }
        renderRanking();
      });
      head.append(th);
    }
    rankTable.append(head);
    for (const city of sortRankings(rankings, sortKey, sortDescending)) {
      const tr = el("tr");
      tr.append(el("td", "", city.city));
      tr.append(el("td", "", String(city.mean_sci)));
      tr.append(el("td", "", city.modal_class));
      rankTable.append(tr);
    }

    histogramBox.textContent = "";
    const totals = totalHistogram(rankings, meta.class_labels);
    const top = Math.max(...Object.values(totals), 1);
    for (const label of meta.class_labels) {
      const row = el("div", "prob-row");
      row.append(el("span", "prob-label", label));
      const track = el("div", "bar-track");
      const fill = el("div", "bar-fill");
      fill.style.width = `${((totals[label] ?? 0) / top) * 100}%`;
      track.append(fill);
      row.append(track);
      row.append(el("span", "prob-value", String(totals[label] ?? 0)));
      histogramBox.append(row);
    }
  }

  async function loadRankingCsv(text: string): Promise<void> {
    rankError.classList.add("hidden");
    try {
      const records = parseDatasetCsv(text);
      const response = await client.rank(records);
      rankings = response.cities;
      sortKey = "mean_sci";
      sortDescending = true;
      renderRanking();
    } catch (error) {
      rankError.textContent =
        error instanceof CsvError || error instanceof ServiceError
          ? String((error as Error).message)
          : `unexpected error: ${String(error)}`;
      rankError.classList.remove("hidden");
    }
  }

  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (file) void file.text().then(loadRankingCsv);
  });

  // first paint without waiting out the debounce
  scheduler.flush({ ...payload });

  return {
    payload: () => ({ ...payload }),
    setFeature(name, value) {
      payload[name] = value;
      const control = inputs.get(name);
      if (control) control.value = String(value);
      const readout = readouts.get(name);
      if (readout) readout.textContent = String(value);
      announceChange();
    },
    lastResponse: () => last,
    loadRankingCsv,
    meta,
  };
}
