"""HTTP advisory service: a thin JSON shell over the library calls.

Every numeric a client sees comes from the same code paths the CLI uses
(`advise`, `predict_components`, `savings_pipeline`), so the service adds
transport, not math. Requests are stateless against an immutable snapshot
(bundle + plant + tariff + table); the admin reload endpoint builds a new
snapshot off to the side and swaps it in atomically, so concurrent
requests see either the old bundle or the new one, never a blend.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from cwloop import advisory
from cwloop.datagen import Dataset
from cwloop.errors import CwloopError
from cwloop.plant import PlantConfig, load_config
from cwloop.surrogate import SurrogateBundle, load_bundle
from cwloop.tariff import TariffSchedule, load_schedule

API_PREFIX = "/v1"


@dataclass
class ServiceSnapshot:
    """Immutable per-request view of the loaded artifacts."""

    bundle: SurrogateBundle
    plant: PlantConfig
    tariff: TariffSchedule | None = None
    table: advisory.LookupTable | None = None

    @property
    def fingerprint(self) -> str:
        return self.bundle.training_data_fingerprint


@dataclass
class _JobStore:
    lock: threading.Lock = field(default_factory=threading.Lock)
    jobs: dict = field(default_factory=dict)

    def create(self) -> str:
        job_id = uuid.uuid4().hex
        with self.lock:
            self.jobs[job_id] = {"status": "running"}
        return job_id

    def finish(self, job_id: str, result=None, error: str | None = None):
        with self.lock:
            if error is None:
                self.jobs[job_id] = {"status": "done", "result": result}
            else:
                self.jobs[job_id] = {"status": "failed", "error": error}

    def get(self, job_id: str):
        with self.lock:
            return self.jobs.get(job_id)


class CurrentSettings(BaseModel):
    t_cws_f: float
    n_fans: int


class AdviseRequest(BaseModel):
    q_load_tons: float
    t_wb_f: float
    current: CurrentSettings | None = None
    timestamp: str | None = None


class WhatIfRequest(BaseModel):
    q_load_tons: float
    t_wb_f: float
    t_cws_f: float
    n_fans: int
    timestamp: str | None = None


class SavingsRequest(BaseModel):
    measured_path: str
    months: list[str]


class ReloadRequest(BaseModel):
    bundle_path: str


def create_app(
    bundle: SurrogateBundle,
    plant: PlantConfig,
    tariff: TariffSchedule | None = None,
    table: advisory.LookupTable | None = None,
    token: str | None = None,
) -> FastAPI:
    app = FastAPI(title="cwloop advisory service", version="1")
    app.state.snapshot = ServiceSnapshot(
        bundle=bundle, plant=plant, tariff=tariff, table=table
    )
    app.state.jobs = _JobStore()
    app.state.token = token

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        errors = [
            {"field": ".".join(str(p) for p in e["loc"] if p != "body"),
             "message": e["msg"]}
            for e in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"errors": errors})

    @app.exception_handler(CwloopError)
    async def domain_handler(request: Request, exc: CwloopError):
        return JSONResponse(
            status_code=400,
            content={"errors": [{"field": "", "message": str(exc)}]},
        )

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        required = request.app.state.token
        if required and request.url.path != f"{API_PREFIX}/health":
            if request.headers.get("x-api-token") != required:
                return JSONResponse(status_code=401, content={"errors": [
                    {"field": "x-api-token", "message": "missing or wrong token"}
                ]})
        return await call_next(request)

    @app.get(f"{API_PREFIX}/health")
    async def health(request: Request):
        snap: ServiceSnapshot = request.app.state.snapshot
        return {"status": "ok", "bundle_fingerprint": snap.fingerprint}

    @app.get(f"{API_PREFIX}/bundle/meta")
    async def bundle_meta(request: Request):
        snap: ServiceSnapshot = request.app.state.snapshot
        return {
            "created_at": snap.bundle.created_at,
            "bundle_fingerprint": snap.fingerprint,
            "schema_version": snap.bundle.schema_version,
            "envelope": {k: list(v) for k, v in snap.bundle.envelope.items()},
            "models": {
                name: {
                    "target": model.target_name,
                    "features": model.feature_names,
                    "n_trees": model.n_trees,
                    "training_metrics": model.training_metrics,
                }
                for name, model in snap.bundle.models().items()
            },
        }

    @app.get(f"{API_PREFIX}/table")
    async def get_table(request: Request):
        snap: ServiceSnapshot = request.app.state.snapshot
        if snap.table is None:
            return JSONResponse(
                status_code=404,
                content={"errors": [{"field": "", "message": "no look-up table loaded"}]},
            )
        return snap.table.to_dict()

    @app.post(f"{API_PREFIX}/advise")
    async def advise_endpoint(body: AdviseRequest, request: Request):
        snap: ServiceSnapshot = request.app.state.snapshot
        current = (
            (body.current.t_cws_f, body.current.n_fans) if body.current else None
        )
        rec = advisory.advise(
            snap.bundle,
            snap.plant,
            body.q_load_tons,
            body.t_wb_f,
            current=current,
            tariff=snap.tariff,
            timestamp=body.timestamp,
        )
        payload = rec.as_dict()
        payload["bundle_fingerprint"] = snap.fingerprint
        return payload

    @app.post(f"{API_PREFIX}/whatif")
    async def whatif(body: WhatIfRequest, request: Request):
        snap: ServiceSnapshot = request.app.state.snapshot
        parts = snap.bundle.predict_components(
            [body.q_load_tons], [body.t_wb_f], [body.t_cws_f], [body.n_fans],
            snap.plant.pump_power,
        )
        total = float(parts["total"][0])
        cost_rate = None
        if snap.tariff is not None and body.timestamp is not None:
            from cwloop.tariff import interval_rate

            cost_rate = total * interval_rate(snap.tariff, body.timestamp)
        return {
            "p_chiller_kw": float(parts["p_chiller"][0]),
            "q_rej_tons": float(parts["q_rej"][0]),
            "p_fan_kw": float(parts["p_fan"][0]),
            "p_pump_kw": float(parts["p_pump"][0]),
            "total_power_kw": total,
            "cost_rate_per_h": cost_rate,
            "warnings": snap.bundle.envelope_warnings(body.q_load_tons, body.t_wb_f),
            "bundle_fingerprint": snap.fingerprint,
        }

    @app.post(f"{API_PREFIX}/savings")
    async def savings(body: SavingsRequest, request: Request):
        snap: ServiceSnapshot = request.app.state.snapshot
        if snap.tariff is None:
            return JSONResponse(
                status_code=400,
                content={"errors": [{"field": "", "message": "no tariff loaded"}]},
            )
        store: _JobStore = request.app.state.jobs
        job_id = store.create()

        def run_job():
            try:
                measured = Dataset.from_csv(body.measured_path)
                months = advisory.savings_pipeline(
                    snap.bundle, snap.plant, measured, snap.tariff, body.months
                )
                store.finish(job_id, result=[
                    {
                        "month": m.month,
                        "report": m.report.as_dict(),
                        "n_intervals": len(m.intervals),
                    }
                    for m in months
                ])
            except Exception as exc:  # report, never crash the server
                store.finish(job_id, error=f"{type(exc).__name__}: {exc}")

        threading.Thread(target=run_job, daemon=True).start()
        return {"job_id": job_id, "status": "running"}

    @app.get(f"{API_PREFIX}/savings/{{job_id}}")
    async def savings_status(job_id: str, request: Request):
        job = request.app.state.jobs.get(job_id)
        if job is None:
            return JSONResponse(
                status_code=404,
                content={"errors": [{"field": "job_id", "message": "unknown job"}]},
            )
        return job

    @app.post(f"{API_PREFIX}/admin/reload")
    async def reload_bundle(body: ReloadRequest, request: Request):
        old: ServiceSnapshot = request.app.state.snapshot
        new_bundle = load_bundle(body.bundle_path)
        request.app.state.snapshot = ServiceSnapshot(
            bundle=new_bundle, plant=old.plant, tariff=old.tariff, table=old.table
        )
        return {
            "status": "reloaded",
            "bundle_fingerprint": new_bundle.training_data_fingerprint,
        }

    return app


def create_app_from_paths(
    bundle_path: str,
    plant_path: str | None = None,
    tariff_path: str | None = None,
    table_path: str | None = None,
    token: str | None = None,
) -> FastAPI:
    import json

    bundle = load_bundle(bundle_path)
    plant = load_config(plant_path) if plant_path else PlantConfig()
    schedule = load_schedule(tariff_path) if tariff_path else None
    table = None
    if table_path:
        with open(table_path) as f:
            table = advisory.LookupTable.from_dict(json.load(f))
    return create_app(bundle, plant, schedule, table, token=token)
