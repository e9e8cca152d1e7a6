"""HTTP service wrapping the solvers.

Endpoints mirror the CLI subcommands: POST /discrete, /gaussian, /wyner,
/sweep, plus GET /health. Request/response bodies are pydantic models; all
rates are in nats. Run with `uvicorn graywyner.service:app`.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .ba import BaConfig
from .gaussian import GaussianSpec, RegimeError, solve_gaussian_rd, wyner_ci
from .model import (
    DegenerateInputError,
    DimensionMismatchError,
    Multipliers,
    load_source,
)
from .solver import OuterConfig, rd_from_multipliers, solve_rd, sweep

app = FastAPI(title="graywyner", version="0.1.0")


class SourceModel(BaseModel):
    alphabet: list[int]
    probs: list[list[float]]
    d1: list[list[float]] | None = None
    d2: list[list[float]] | None = None


class SolverConfigModel(BaseModel):
    epsilon: float = 1e-6
    max_iterations: int = 500
    u_size: int | None = None
    seed: int = 0


class DiscreteRequest(BaseModel):
    source: SourceModel
    alpha: tuple[float, float, float]
    targets: tuple[float, float] | None = None
    beta: tuple[float, float] | None = None
    config: SolverConfigModel = Field(default_factory=SolverConfigModel)


class RdResponse(BaseModel):
    rd_nats: float
    R0: float
    R1: float
    R2: float
    D1: float
    D2: float
    beta1: float
    beta2: float
    lagrangian_nats: float
    outer_iterations: int
    inner_iterations: int
    converged: bool
    notes: list[str]


class GaussianRequest(BaseModel):
    rho: float
    alpha: tuple[float, float, float]
    targets: tuple[float, float]


class CertificateModel(BaseModel):
    H: list[list[float]]
    b: float
    omega1: float
    omega2: float
    eta1: float
    eta2: float
    gamma1: float
    gamma2: float
    beta1: float
    beta2: float
    K0: float
    sigma_v1_sq: float
    sigma_v2_sq: float
    det_H: float
    det_G1: float
    det_G2: float


class GaussianResponse(BaseModel):
    region: str
    m1: float
    m2: float
    sigma0sq: float
    rd_nats: float
    R0: float
    R1: float
    R2: float
    representable: bool
    notes: list[str]
    certificate: CertificateModel | None


class WynerRequest(BaseModel):
    rho: float
    targets: tuple[float, float]


class WynerResponse(BaseModel):
    C_W_nats: float
    case: str


class SweepRequest(BaseModel):
    source: SourceModel
    alpha: tuple[float, float, float]
    targets: tuple[float, float]
    axis: str = "D1"
    values: list[float]
    config: SolverConfigModel = Field(default_factory=SolverConfigModel)


class SweepRow(BaseModel):
    axis_value: float
    rd_nats: float
    R0_nats: float
    R1_nats: float
    R2_nats: float
    D1: float
    D2: float
    beta1: float
    beta2: float
    outer_iters: int
    converged: bool
    error: str | None = None


def _weights(alpha):
    from .model import Weights

    try:
        return Weights(*alpha)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


def _parse_source(model):
    try:
        return load_source(model.model_dump())
    except (DimensionMismatchError, DegenerateInputError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))


def _ba_config(model):
    return BaConfig(
        epsilon=model.epsilon,
        max_iterations=model.max_iterations,
        u_size=model.u_size,
        init=model.seed,
    )


def _rd_response(result):
    d1, d2 = result.achieved
    return RdResponse(
        rd_nats=result.rd_value,
        R0=result.rate_triple[0],
        R1=result.rate_triple[1],
        R2=result.rate_triple[2],
        D1=d1,
        D2=d2,
        beta1=result.multipliers.b1,
        beta2=result.multipliers.b2,
        lagrangian_nats=result.lagrangian_value,
        outer_iterations=result.outer_iterations,
        inner_iterations=result.inner_state.iteration,
        converged=result.converged,
        notes=list(result.notes),
    )


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/discrete", response_model=RdResponse)
def discrete(req: DiscreteRequest):
    pmf, dist = _parse_source(req.source)
    weights = _weights(req.alpha)
    cfg = _ba_config(req.config)
    if (req.targets is None) == (req.beta is None):
        raise HTTPException(
            status_code=422, detail="give exactly one of targets or beta"
        )
    try:
        if req.beta is not None:
            result = rd_from_multipliers(
                pmf, dist, weights, Multipliers(*req.beta), cfg
            )
        else:
            result = solve_rd(
                pmf, dist, weights, req.targets, OuterConfig(inner=cfg)
            )
    except (DegenerateInputError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return _rd_response(result)


@app.post("/gaussian", response_model=GaussianResponse)
def gaussian(req: GaussianRequest):
    weights = _weights(req.alpha)
    try:
        sol = solve_gaussian_rd(weights, req.targets, GaussianSpec(req.rho))
    except RegimeError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    cert = None
    if sol.certificate is not None:
        c = sol.certificate
        cert = CertificateModel(
            H=[list(map(float, row)) for row in c.H],
            b=c.b, omega1=c.omega1, omega2=c.omega2,
            eta1=c.eta1, eta2=c.eta2, gamma1=c.gamma1, gamma2=c.gamma2,
            beta1=c.b1, beta2=c.b2, K0=c.K0,
            sigma_v1_sq=c.sigma_v1_sq, sigma_v2_sq=c.sigma_v2_sq,
            det_H=c.det_H, det_G1=c.det_G1, det_G2=c.det_G2,
        )
    return GaussianResponse(
        region=sol.region,
        m1=sol.m1 if math.isfinite(sol.m1) else 0.0,
        m2=sol.m2 if math.isfinite(sol.m2) else 0.0,
        sigma0sq=sol.sigma0sq if math.isfinite(sol.sigma0sq) else 0.0,
        rd_nats=sol.rd_value,
        R0=sol.rate_triple[0],
        R1=sol.rate_triple[1],
        R2=sol.rate_triple[2],
        representable=sol.representable,
        notes=list(sol.notes),
        certificate=cert,
    )


@app.post("/wyner", response_model=WynerResponse)
def wyner(req: WynerRequest):
    try:
        value, case = wyner_ci(req.targets, GaussianSpec(req.rho))
    except RegimeError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return WynerResponse(C_W_nats=value, case=case)


@app.post("/sweep", response_model=list[SweepRow])
def sweep_endpoint(req: SweepRequest):
    if not req.values:
        raise HTTPException(status_code=422, detail="empty sweep grid")
    if req.axis not in ("D1", "D2", "alpha_scale"):
        raise HTTPException(status_code=422, detail=f"unknown axis {req.axis!r}")
    pmf, dist = _parse_source(req.source)
    weights = _weights(req.alpha)
    cfg = OuterConfig(inner=_ba_config(req.config))
    rows = sweep(pmf, dist, weights, req.targets, req.axis, req.values, cfg)
    return [SweepRow(**{**row, "error": row.get("error")}) for row in rows]
