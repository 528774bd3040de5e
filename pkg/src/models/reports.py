"""Pydantic models for computed reports and CLI artifacts."""

from typing import List, Optional

from pydantic import BaseModel, Field


class ExcessReport(BaseModel):
    """Excess of a curve over a window."""

    window: List[List[float]] = Field(description="Window as sorted disjoint [lo, hi] intervals")
    measure: float = Field(description="Lebesgue measure of the window")
    gram: List[List[float]] = Field(description="Time average of h h^T over the window (r x r)")
    value: float = Field(description="Excess: square root of the smallest Gram eigenvalue")
    minimizer: List[float] = Field(description="Unit eigenvector v for the smallest eigenvalue")
    hyperplane_value: float = Field(
        description="RMS distance of the controls to the hyperplane orthogonal to the minimizer"
    )
    seed: Optional[int] = Field(default=None, description="Settings seed of the run that produced the report")
    tolerance: Optional[float] = Field(default=None, description="Numerical tolerance of the run")


class ExcessScalingReport(BaseModel):
    """Invariance and homogeneity of the excess under translation and dilation."""

    scale: float = Field(description="Dilation factor lambda")
    base: float = Field(description="exc(gamma; B)")
    translated: float = Field(description="exc(g * gamma; B)")
    dilated: float = Field(description="exc(delta_lambda o gamma; B), expected lambda * base")
    reparametrized: float = Field(
        description="exc(delta_lambda(gamma(./lambda)); lambda B), expected base"
    )
    max_deviation: float = Field(description="Largest deviation from the expected values")
    tolerance: float = Field(description="Tolerance applied to max_deviation")
    passed: bool = Field(description="Whether every identity held within tolerance")
    seed: Optional[int] = Field(default=None, description="Settings seed of the run that produced the report")


class ScaleSweepRow(BaseModel):
    """Excess over the window of one scale."""

    scale: float = Field(description="Half-width (or width, one-sided) of the window")
    excess: float = Field(description="Excess over the window")
    direction: List[float] = Field(description="Minimizing direction v")


class IntervalSelection(BaseModel):
    """r disjoint ordered subintervals with linearly independent projected increments."""

    window: List[float] = Field(description="Search interval [lo, hi]")
    intervals: List[List[float]] = Field(description="Selected [a_i, b_i], in time order")
    increments: List[List[float]] = Field(description="Projected increments Delta_i")
    det: float = Field(description="|det(Delta_1, ..., Delta_r)|")
    quality: float = Field(description="Normalized quality det / |I|^r (measured constant)")
    lower_bound_holds: bool = Field(
        description="Whether |Delta_i| >= quality * |I| for every i"
    )
    grid_depth: int = Field(description="Dyadic depth actually searched")
    grid_det: float = Field(description="Best |det| on the grid before refinement")


class SuiteResult(BaseModel):
    """Outcome of one identity fuzz suite on one algebra."""

    suite: str = Field(description="Identity checked")
    algebra: str = Field(description="Algebra name")
    cases: int = Field(description="Number of random cases")
    max_residual: float = Field(description="Largest residual over all cases")
    tolerance: float = Field(description="Acceptance tolerance")
    passed: bool = Field(description="max_residual <= tolerance")


class SuiteReport(BaseModel):
    """Collected identity suite results with run metadata."""

    seed: int = Field(description="Seed of the random generator")
    threads: int = Field(description="Worker threads used")
    results: List[SuiteResult] = Field(description="One entry per (suite, algebra)")
    passed: bool = Field(description="Whether every suite passed")


class AlgebraReport(BaseModel):
    """Validated algebra summary."""

    name: str = Field(description="Algebra name")
    layer_dims: List[int] = Field(description="Layer dimensions")
    dimension: int = Field(description="Total dimension n")
    step: int = Field(description="Step s")
    rank: int = Field(description="Rank r")
    labels: List[str] = Field(description="Basis labels")
    checks: List[str] = Field(description="Structural checks that passed")
    witt_dims: Optional[List[int]] = Field(
        default=None, description="Free-algebra layer dimensions from the Witt formula"
    )
    suites: Optional[List[SuiteResult]] = Field(
        default=None, description="Fuzzed identity suites run on the algebra"
    )


class CutGainReport(BaseModel):
    """Length gained by a cut against the excess lower bound."""

    interval: List[float] = Field(description="Cut interval [s, s']")
    length_before: float = Field(description="L(gamma)")
    length_after: float = Field(description="L(cut(gamma; J))")
    gain: float = Field(description="L(gamma) - L(cut(gamma; J))")
    excess: float = Field(description="exc(gamma; J)")
    bound: float = Field(description="(|J| / 2) exc(gamma; J)^2")
    holds: bool = Field(description="gain >= bound up to rounding")


class BlowupRow(BaseModel):
    """Blow-up diagnostics at one scale."""

    scale: float = Field(description="Scale lambda")
    excess: float = Field(description="Excess of the original over the lambda-window")
    direction: List[float] = Field(description="Minimizing direction of the excess")
    rescaled_excess: float = Field(description="Excess of the rescaled curve over [-1, 1] (or [0, 1])")
    mean_control: List[float] = Field(description="v_lambda: normalized mean control over the rescaled window")
    residual: float = Field(description="r_lambda: L2 distance of the rescaled controls to v_lambda")
    ratio_excess: float = Field(description="excess / sqrt(lambda / lambda_0)")


class BlowupProfile(BaseModel):
    """Excess and control-averaging diagnostics across shrinking scales."""

    anchor: float = Field(description="Anchor time t")
    one_sided: bool = Field(description="Windows [t, t + lambda] instead of [t - lambda, t + lambda]")
    window_factor: float = Field(description="N: residuals average over [-N, N] in rescaled time")
    rows: List[BlowupRow] = Field(description="One row per scale, in input order")
    excess_monotone: bool = Field(description="Excess does not increase along the scales")
    residual_monotone: bool = Field(description="Residual does not increase along the scales")
    consistency_gap: float = Field(description="Largest |rescaled_excess - excess| over the scales")
    tolerance: float = Field(description="Tangent-line detection threshold on the residual")
    tangent_detected: bool = Field(description="Residual below tolerance at the smallest scale")
    tangent_direction: Optional[List[float]] = Field(
        default=None, description="v of the tangent line t -> exp(t v), when detected"
    )
    seed: Optional[int] = Field(default=None, description="Settings seed of the run that produced the report")


class CurveSample(BaseModel):
    """Curve point at one time."""

    t: float = Field(description="Time")
    point: List[float] = Field(description="Exponential coordinates of gamma(t)")


class CurveSummary(BaseModel):
    """Summary of a curve file."""

    algebra: str = Field(description="Algebra name")
    domain: List[float] = Field(description="[a, b]")
    pieces: int = Field(description="Number of constant-control pieces")
    length: float = Field(description="Length")
    arclength: bool = Field(description="Whether every control has unit norm")
    start: List[float] = Field(description="gamma(a)")
    end: List[float] = Field(description="gamma(b)")
    lipschitz_constant: float = Field(description="Measured C with ||gamma(t)^-1 gamma(t')|| <= C |t - t'|")
    samples: List[CurveSample] = Field(description="Points on a uniform time grid")
