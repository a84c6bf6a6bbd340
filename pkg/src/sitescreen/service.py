"""JSON-over-HTTP scenario service exposing a trained model bundle.

All endpoints answer against an immutable in-memory bundle; requests never
mutate state, so concurrent identical requests return identical bodies.
"""

from __future__ import annotations

from datetime import date as Date
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .dataset import FEATURE_NAMES, Dataset, SiteRecord
from .errors import SiteScreenError
from .index import rank_sites
from .pipeline import ModelBundle, run_scenario


class ScenarioRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    solar_irradiance: float
    temperature: float
    wind_speed: float
    aod: float
    land_cover_class: float
    water_proximity: float
    elevation: float
    month: float


class RankRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    city: str
    date: str
    solar_irradiance: float
    temperature: float
    wind_speed: float
    aod: float | None = None
    land_cover_class: int
    water_proximity: float
    elevation: float
    month: int


class RankRequest(BaseModel):
    records: list[RankRecord]


def create_app(bundle: ModelBundle, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="sitescreen scenario service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        fields = []
        for err in exc.errors():
            loc = [str(p) for p in err.get("loc", []) if p not in ("body",)]
            fields.append(".".join(loc) or "body")
        return JSONResponse(
            status_code=400,
            content={"error": "invalid request", "fields": fields},
        )

    @app.exception_handler(SiteScreenError)
    async def domain_error_handler(request: Request, exc: SiteScreenError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/scenario")
    def scenario(payload: ScenarioRequest, all_classes: bool = False):
        return run_scenario(bundle, payload.model_dump(), all_classes=all_classes)

    @app.get("/v1/importance")
    def importance():
        order = np.argsort(-bundle.importance.mean_abs_shap, kind="stable")
        active = bundle.weights.values
        return {
            "features": [
                {
                    "name": FEATURE_NAMES[i],
                    "mean_abs_shap": float(bundle.importance.mean_abs_shap[i]),
                    "weight": float(active[i]),
                }
                for i in order
            ]
        }

    @app.get("/v1/model/meta")
    def meta():
        return {
            "format_version": bundle.version,
            "dataset_fingerprint": bundle.dataset_fingerprint,
            "created_at": bundle.created_at,
            "bins": list(bundle.bins.cuts),
            "weight_mode": bundle.weights.mode,
            "class_labels": list(bundle.labeling.class_labels),
            "feature_names": list(FEATURE_NAMES),
            "scaling": bundle.scaler.as_dict(),
            "config": {
                **{k: v for k, v in vars(bundle.config).items() if k != "bin_cuts"},
                "bin_cuts": list(bundle.config.bin_cuts),
            },
        }

    @app.post("/v1/rank")
    def rank(payload: RankRequest):
        records = []
        for i, rec in enumerate(payload.records):
            try:
                day = Date.fromisoformat(rec.date)
            except ValueError:
                raise SiteScreenError(f"record {i + 1}: invalid date {rec.date!r}") from None
            record = SiteRecord(
                city=rec.city,
                date=day,
                solar_irradiance=rec.solar_irradiance,
                temperature=rec.temperature,
                wind_speed=rec.wind_speed,
                aod=rec.aod,
                land_cover_class=rec.land_cover_class,
                water_proximity=rec.water_proximity,
                elevation=rec.elevation,
                month=rec.month,
            )
            record.validate(context=f"record {i + 1}")
            records.append(record)
        dataset = Dataset.from_records(records)
        rankings = rank_sites(dataset, bundle)
        return {
            "cities": [
                {
                    "city": r.city,
                    "mean_sci": r.mean_sci,
                    "modal_class": r.modal_class,
                    "histogram": r.histogram,
                }
                for r in rankings
            ]
        }

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=str(static_dir), html=True), name="dashboard")

    return app


def serve(bundle: ModelBundle, host: str = "127.0.0.1", port: int = 8000,
          static_dir: str | Path | None = None) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(bundle, static_dir=static_dir), host=host, port=port)
