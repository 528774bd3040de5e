"""Shortening parameters and the surgery ledger."""

from typing import List, Optional

from pydantic import BaseModel, Field

from src.exceptions import InfeasibleParametersError

STATUS_SHORTENED = "Shortened"
STATUS_NO_NET_GAIN = "NoNetGain"


class ShortenParams(BaseModel):
    """Parameters of the cut-and-adjust pipeline.

    Stage k searches correction intervals inside
    length_unit * (eta / length_unit) ** rho[k - 1].
    """

    epsilon: float = Field(description="Required excess lower bound on the cut window")
    eta: float = Field(description="Cut scale")
    beta: float = Field(description="Margin exponent")
    rho: List[float] = Field(description="Window exponents rho_1 = 1 > rho_2 > ... > rho_s")
    grid_depth: int = Field(default=6, description="Dyadic depth of the interval search")
    length_unit: float = Field(default=1.0, description="Unit u of the stage windows")
    tolerance: float = Field(default=1e-8, description="Endpoint and stage residual tolerance")

    def window(self, k: int) -> float:
        """Half-width (symmetric) or width (one-sided) of the stage-k window."""
        return self.length_unit * (self.eta / self.length_unit) ** self.rho[k - 1]

    def margins(self) -> List[float]:
        """((k + 1) rho_k - rho_{k+1}) / k - (1 + beta) for k = 1..s-1."""
        return [
            ((k + 1) * self.rho[k - 1] - self.rho[k]) / k - (1.0 + self.beta)
            for k in range(1, len(self.rho))
        ]

    def check_feasible(self) -> None:
        """Validate the parameter constraints.

        Raises:
            InfeasibleParametersError: If a constraint fails
        """
        if not self.rho or self.rho[0] != 1.0:
            raise InfeasibleParametersError(f"rho must start with 1, got {self.rho}")
        if any(b >= a for a, b in zip(self.rho, self.rho[1:])) or self.rho[-1] <= 0:
            raise InfeasibleParametersError(f"rho must decrease strictly and stay positive, got {self.rho}")
        if self.beta < 0:
            raise InfeasibleParametersError(f"beta must be nonnegative, got {self.beta}")
        if not 0 < self.eta < self.length_unit:
            raise InfeasibleParametersError(
                f"eta must lie in (0, length_unit) = (0, {self.length_unit}), got {self.eta}"
            )
        if self.epsilon < 0:
            raise InfeasibleParametersError(f"epsilon must be nonnegative, got {self.epsilon}")
        for k, margin in enumerate(self.margins(), start=1):
            if not margin > 0:
                raise InfeasibleParametersError(
                    f"window exponents violate ((k+1) rho_k - rho_(k+1)) / k > 1 + beta at k = {k} "
                    f"(margin {margin:.4g})"
                )


class StageChecks(BaseModel):
    """Structural properties of the curve after a stage."""

    start_fixed: bool = Field(description="initial point unchanged")
    defect_in_subgroup: bool = Field(description="defect has no components in layers <= k")
    shorter_than_input: bool = Field(description="T_k < T")
    length_nondecreasing: bool = Field(description="T_k >= T_(k-1)")
    projection_agrees: bool = Field(description="projection matches gamma outside the stage window")
    projection_gap: float = Field(description="largest gap outside the stage window")
    projection_deviation: float = Field(description="sup-norm projection deviation")


class StageRecord(BaseModel):
    """Ledger entry for one correction stage."""

    stage: int = Field(description="Stage k (devices use Y in layer k)")
    window: List[float] = Field(description="Search window of the stage")
    defect: List[float] = Field(description="E_k = log(gamma(T)^-1 gamma^(k)(T_k)) before the stage")
    defect_layer_norms: List[float] = Field(description="|pi_j(E_k)| for every layer j")
    target_norm: float = Field(description="|pi_(k+1)(E_k)|")
    target_scale: float = Field(description="eta ** ((k + 1) rho_k), the expected size of the target")
    aux_layer: Optional[List[float]] = Field(
        default=None, description="pi_(k+1)(g_k) of the auxiliary element, when defined"
    )
    aux_gap: Optional[float] = Field(
        default=None, description="|pi_(k+1)(g_k) - pi_(k+1)(E_k)|"
    )
    decomposition: List[List[float]] = Field(description="Y_i with sum_i [Y_i, X_i] = pi_(k+1)(E_k)")
    decomposition_constant: float = Field(description="max_i |Y_i| / |pi_(k+1)(E_k)|")
    intervals: List[List[float]] = Field(description="Correction intervals [a_j, b_j]")
    increments: List[List[float]] = Field(description="Projected increments Delta_j")
    det: float = Field(description="|det(Delta_1, ..., Delta_r)|")
    grid_depth: int = Field(description="Grid depth used by the interval search")
    coefficients: List[List[float]] = Field(description="c_ij with X_i = sum_j c_ij Delta_j")
    max_coefficient: float = Field(description="max |c_ij|")
    coefficient_scale: float = Field(description="eta ** (-rho_(k+1))")
    corrections: List[List[float]] = Field(description="Z_j = sum_i c_ij Y_i (devices use -Z_j)")
    connector_lengths: List[float] = Field(description="Connector length for each device")
    connector_constants: List[float] = Field(description="Connector length / ||exp(Z_j)||")
    correction_cost: float = Field(description="T_(k+1) - T_k")
    running_length: float = Field(description="Curve length after the stage")
    checks: StageChecks = Field(description="Stage property checks")


class SurgeryLedger(BaseModel):
    """Full accounting of one shortening run."""

    mode: str = Field(description="one-sided or symmetric")
    status: str = Field(description="Shortened or NoNetGain")
    params: ShortenParams = Field(description="Parameters used")
    input_length: float = Field(description="T, length of the input curve")
    cut_excess: float = Field(description="Excess of the input on the cut window")
    cut_length: float = Field(description="T_1, length after the cut")
    gross_gain: float = Field(description="T - T_1")
    cut_gain_bound: float = Field(description="eta * epsilon^2 / 2")
    cut_gain_holds: bool = Field(description="gross_gain >= cut_gain_bound")
    stages: List[StageRecord] = Field(description="One record per correction stage")
    total_correction_cost: float = Field(description="Sum of stage correction costs")
    net_gain: float = Field(description="gross_gain - total_correction_cost")
    final_length: float = Field(description="Length of the output curve")
    endpoint_residual: List[float] = Field(description="|pi_j(gamma(T)^-1 output(end))| per layer")
    endpoint_residual_max: float = Field(description="Largest endpoint residual over the layers")


class SweepRow(BaseModel):
    """One eta value of a shortening sweep."""

    eta: float = Field(description="Cut scale")
    gross: float = Field(description="Gross cut gain")
    cost: float = Field(description="Total correction cost")
    net: float = Field(description="Net gain")
    endpoint_residual: float = Field(description="Largest endpoint residual")
    status: str = Field(description="Pipeline status")
    stage_costs: List[float] = Field(description="Correction cost of every stage")


class StageRegression(BaseModel):
    """Log-log fit of one stage's correction cost against eta."""

    stage: int = Field(description="Stage k")
    slope: Optional[float] = Field(description="Fitted exponent (None with fewer than two points)")
    predicted: float = Field(description="((k + 1) rho_k - rho_(k+1)) / k")
    exceeds_margin: Optional[bool] = Field(description="slope > 1 + beta")


class SweepReport(BaseModel):
    """eta-sweep of the shortening pipeline."""

    mode: str = Field(description="one-sided or symmetric")
    rows: List[SweepRow] = Field(description="Rows in input eta order")
    crossover: Optional[float] = Field(
        description="Largest eta with positive net gain at it and at every smaller eta"
    )
    cost_slope: Optional[float] = Field(description="Log-log slope of total cost against eta")
    stage_regressions: List[StageRegression] = Field(description="Per-stage cost fits")


class ScalingCheckReport(BaseModel):
    """Pipeline rerun on delta_lambda(gamma(. / lambda)) with eta and length_unit scaled."""

    scale: float = Field(description="Dilation factor lambda")
    gross_gain: List[float] = Field(description="Gross gain of the original and the scaled run")
    correction_costs: List[List[float]] = Field(description="Stage costs of both runs")
    net_gain: List[float] = Field(description="Net gain of both runs")
    max_relative_deviation: float = Field(description="Largest |scaled - lambda * original| / max(1, |lambda * original|)")
    tolerance: float = Field(description="Acceptance tolerance")
    passed: bool = Field(description="max_relative_deviation <= tolerance")
