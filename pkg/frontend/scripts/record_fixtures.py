"""Record real advisory-service responses as UI test fixtures.

Needs the cwloop package installed (the primary component). The UI test
suite itself never touches the service: it runs entirely off the JSON
files this script writes. Re-run after changing the API surface.

Usage: python3 frontend/scripts/record_fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from cwloop import advisory, datagen, surrogate, tariff
from cwloop.gbt import GBTHyperparams
from cwloop.plant import PlantConfig
from cwloop.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def main() -> None:
    plant = PlantConfig()
    data = datagen.reference_sweep(plant, seed=0)
    train, _ = datagen.split(data, 0.8, seed=42)
    bundle = surrogate.train_bundle(
        train, GBTHyperparams(n_trees=60), created_at="2021-10-01T00:00:00+00:00"
    )
    table = advisory.build_table(
        bundle, plant,
        q_load_grid=tuple(float(q) for q in range(400, 2401, 400)),
        t_wb_grid=tuple(float(t) for t in range(60, 77, 4)),
    )
    app = create_app(bundle, plant, tariff.example_schedule(), table)
    client = TestClient(app)

    FIXTURES.mkdir(parents=True, exist_ok=True)

    def record(name: str, payload) -> None:
        (FIXTURES / f"{name}.json").write_text(json.dumps(payload, indent=2) + "\n")
        print(f"recorded {name}.json")

    record("health", client.get("/v1/health").json())
    record("bundle_meta", client.get("/v1/bundle/meta").json())
    record("table", client.get("/v1/table").json())

    advise_body = {
        "q_load_tons": 1400.0,
        "t_wb_f": 69.0,
        "current": {"t_cws_f": 82.0, "n_fans": 8},
    }
    advise = client.post("/v1/advise", json=advise_body).json()
    record("advise", advise)
    record(
        "advise_no_current",
        client.post("/v1/advise", json={"q_load_tons": 900.0, "t_wb_f": 64.0}).json(),
    )
    record(
        "advise_extrapolation",
        client.post("/v1/advise", json={"q_load_tons": 50000.0, "t_wb_f": 69.0}).json(),
    )
    # a point that sits exactly on the look-up table grid, for the
    # cross-view consistency check (panel vs heatmap cell)
    record(
        "advise_at_grid_point",
        client.post("/v1/advise", json={"q_load_tons": 1200.0, "t_wb_f": 68.0}).json(),
    )

    # what-if at exactly the recommended settings: the zero-gap fixture
    record(
        "whatif_at_recommended",
        client.post(
            "/v1/whatif",
            json={
                "q_load_tons": advise_body["q_load_tons"],
                "t_wb_f": advise_body["t_wb_f"],
                "t_cws_f": advise["t_cws_opt_f"],
                "n_fans": advise["n_fans_opt"],
            },
        ).json(),
    )
    record(
        "whatif_off_optimum",
        client.post(
            "/v1/whatif",
            json={
                "q_load_tons": advise_body["q_load_tons"],
                "t_wb_f": advise_body["t_wb_f"],
                "t_cws_f": 84.0,
                "n_fans": 8,
            },
        ).json(),
    )
    record(
        "validation_error",
        client.post("/v1/advise", json={"q_load_tons": "a lot"}).json(),
    )

    # a finished savings job payload (run the pipeline directly for speed)
    measured = advisory.simulate_measured_month(plant, "2021-06", seed=9)
    months = advisory.savings_pipeline(
        bundle, plant, measured, tariff.example_schedule(), ["2021-06"]
    )
    record(
        "savings_done",
        {
            "status": "done",
            "result": [
                {
                    "month": m.month,
                    "report": m.report.as_dict(),
                    "n_intervals": len(m.intervals),
                }
                for m in months
            ],
        },
    )
    record("savings_running", {"status": "running"})
    record("savings_failed", {"status": "failed", "error": "SchemaError: no rows"})


if __name__ == "__main__":
    main()
