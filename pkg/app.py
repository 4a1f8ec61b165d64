"""
FastAPI application for the radiation-reaction simulator.
Provides REST endpoints for submitting scenario runs and evaluating the self-potential.
"""

import logging
import uuid
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import uvicorn
from fastapi import BackgroundTasks, FastAPI, HTTPException
from pydantic import BaseModel, Field

import settings
from cli import execute_run, field_map_rows
from errors import EXIT_NUMERICAL_FAILURE, ConfigInvalid, RadiationReactionError, exit_code_for
from integrator import integrate
from outputs import plain
from scenario import Scenario, parse_scenario

settings.configure_logging()
logger = logging.getLogger(__name__)

app = FastAPI(
    title="Radiation Reaction API",
    description="API for integrating finite-size shell charges with exact radiation reaction",
    version="1.0.0",
)


# Pydantic models for API requests
class RunRequest(BaseModel):
    scenario: Dict[str, Any]


class PotentialRequest(BaseModel):
    scenario: Dict[str, Any]
    points: List[tuple[float, float, float, float]] = Field(min_length=1)


class RunStatusResponse(BaseModel):
    success: bool
    message: str
    run_id: Optional[str] = None
    details: Optional[Dict[str, Any]] = None


# Global run tracking
runs: Dict[str, Dict[str, Any]] = {}


def _parse(data: Dict[str, Any]) -> Scenario:
    try:
        return parse_scenario(data)
    except ConfigInvalid as e:
        logger.error(f"Rejected scenario: {str(e)}")
        raise HTTPException(status_code=422, detail=str(e))


def _execute(run_id: str, scenario: Scenario) -> None:
    runs[run_id]["status"] = "running"
    try:
        artifacts = execute_run(scenario, Path(settings.OUTPUT_DIR) / run_id)
        runs[run_id].update(
            status="completed",
            summary=plain(artifacts.result.summary.to_dict()),
            artifacts=dict(artifacts.files),
        )
        logger.info(f"Run {run_id} completed")
    except RadiationReactionError as e:
        logger.error(f"Run {run_id} failed: {type(e).__name__}: {str(e)}")
        runs[run_id].update(status="failed", error=f"{type(e).__name__}: {str(e)}", exit_code=exit_code_for(e))
    except Exception as e:
        logger.error(f"Unexpected error in run {run_id}: {type(e).__name__}: {str(e)}")
        runs[run_id].update(status="failed", error=f"{type(e).__name__}: {str(e)}", exit_code=EXIT_NUMERICAL_FAILURE)


@app.get("/")
async def root():
    """Health check endpoint"""
    return {
        "message": "Radiation Reaction API is running",
        "status": "healthy",
        "runs": len(runs),
    }


@app.get("/health")
async def health_check():
    """Detailed health check"""
    active = sum(1 for r in runs.values() if r["status"] in ("queued", "running"))
    return {
        "status": "healthy",
        "output_dir": settings.OUTPUT_DIR,
        "runs": len(runs),
        "active_runs": active,
    }


@app.get("/config")
async def get_config():
    """Process settings and the scenario schema"""
    return {
        "output_dir": settings.OUTPUT_DIR,
        "log_level": settings.LOG_LEVEL,
        "sweep_workers": settings.SWEEP_WORKERS,
        "scenario_schema": Scenario.model_json_schema(),
    }


@app.post("/runs", response_model=RunStatusResponse)
async def submit_run(request: RunRequest, background_tasks: BackgroundTasks):
    """
    Validate a scenario and integrate it in the background.
    Poll /runs/{run_id} for the summary.
    """
    scenario = _parse(request.scenario)
    if scenario.outputs.directory is not None:
        logger.error(f"Rejected scenario {scenario.name}: outputs.directory set over HTTP")
        raise HTTPException(
            status_code=422,
            detail="outputs.directory cannot be set over HTTP; artifacts are written under the service output directory",
        )
    run_id = f"{scenario.name}-{uuid.uuid4().hex[:8]}"
    runs[run_id] = {"scenario": scenario.name, "status": "queued"}
    background_tasks.add_task(_execute, run_id, scenario)
    logger.info(f"Queued run {run_id}")
    return RunStatusResponse(
        success=True,
        message=f"Run queued for scenario {scenario.name}",
        run_id=run_id,
        details={"steps_planned": (scenario.integrator.s_end - scenario.initial_state.s0) / scenario.integrator.step},
    )


@app.get("/runs")
async def list_runs():
    """List all runs and their status"""
    return {
        "runs": [{"run_id": run_id, "scenario": r["scenario"], "status": r["status"]} for run_id, r in runs.items()],
        "total": len(runs),
    }


@app.get("/runs/{run_id}")
async def get_run(run_id: str):
    """Get the status and summary of a run"""
    if run_id not in runs:
        raise HTTPException(status_code=404, detail="Run not found")
    return {"run_id": run_id, **runs[run_id]}


@app.post("/potential")
def evaluate_potential(request: PotentialRequest):
    """
    Integrate the scenario and evaluate the self 4-potential at the given field points.
    Points that cannot be evaluated are returned with their error status.
    """
    scenario = _parse(request.scenario)
    try:
        result = integrate(scenario)
    except RadiationReactionError as e:
        logger.error(f"Error integrating {scenario.name}: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Integration failed: {type(e).__name__}: {str(e)}")

    points = [[float(c) for c in p] for p in request.points]
    rows = field_map_rows(result.history, scenario, np.array(points))
    return {
        "scenario": scenario.name,
        "points": [
            {
                "point": list(row[:4]),
                "potential": None if row[-1] != "ok" else list(row[4:8]),
                "branch": row[8] or None,
                "status": row[9],
            }
            for row in rows
        ],
    }


if __name__ == "__main__":
    uvicorn.run(app, host=settings.HOST, port=settings.PORT)
