import math
from pathlib import Path
from typing import Annotated, Literal

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    model_validator,
)

from fpp_local.core.errors import ModelError
from fpp_local.stochastic.laws import (
    DEFAULT_K_MAX,
    DegreeModel,
    WeightModel,
    is_regular,
    offspring_mean,
)


class BaseSchema(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")


class DeterministicDegree(BaseSchema):
    kind: Literal["deterministic"]
    value: NonNegativeInt

    def build(self) -> DegreeModel:
        return DegreeModel.deterministic(self.value)


class PmfDegree(BaseSchema):
    kind: Literal["pmf"]
    atoms: dict[NonNegativeInt, Annotated[float, Field(ge=0)]] = Field(..., min_length=1)

    def build(self) -> DegreeModel:
        return DegreeModel.from_atoms(self.atoms)


class PowerLawDegree(BaseSchema):
    kind: Literal["power_law"]
    exponent: float = Field(..., gt=1, description="P(D = k) ~ k**(-exponent)")
    k_max: PositiveInt = DEFAULT_K_MAX
    k_min: PositiveInt = 1

    def build(self) -> DegreeModel:
        return DegreeModel.power_law(self.exponent, self.k_max, self.k_min)


class ExponentialWeight(BaseSchema):
    kind: Literal["exponential"]
    rate: PositiveFloat = 1.0

    def build(self) -> WeightModel:
        return WeightModel.exponential(self.rate)


class UniformWeight(BaseSchema):
    kind: Literal["uniform"]
    a: Annotated[float, Field(ge=0)] = 0.0
    b: PositiveFloat = 1.0

    @model_validator(mode="after")
    def _ordered(self) -> "UniformWeight":
        if self.a >= self.b:
            raise ValueError("uniform weights need a < b")
        return self

    def build(self) -> WeightModel:
        return WeightModel.uniform(self.a, self.b)


class WeibullWeight(BaseSchema):
    kind: Literal["weibull"]
    shape: PositiveFloat
    scale: PositiveFloat = 1.0

    def build(self) -> WeightModel:
        return WeightModel.weibull(self.shape, self.scale)


DegreeSpec = Annotated[
    DeterministicDegree | PmfDegree | PowerLawDegree, Field(discriminator="kind")
]
WeightSpec = Annotated[
    ExponentialWeight | UniformWeight | WeibullWeight, Field(discriminator="kind")
]


class ExperimentConfig(BaseSchema):
    degree: DegreeSpec
    weight: WeightSpec
    regime: Literal["malthusian", "explosive"] = "malthusian"
    n_grid: list[PositiveInt] = Field(..., min_length=1)
    radius: NonNegativeInt = Field(2, alias="R")
    samples: PositiveInt = 1000
    pairs_per_graph: PositiveInt = Field(10, alias="pairsPerGraph")
    eps: PositiveFloat = 0.1
    budget: PositiveInt = Field(10_000, alias="N_max")
    horizon: PositiveInt = 12
    weight_bins: NonNegativeInt = Field(0, alias="weightBins")
    ignore_colour: bool = Field(False, alias="ignoreColour")
    explore_steps: PositiveInt = Field(50, alias="exploreSteps")
    scaling_graphs: PositiveInt = Field(10, alias="scalingGraphs")
    bootstrap: PositiveInt = 200
    node_cap: PositiveInt = Field(10**7, alias="nodeCap")
    max_seconds: PositiveFloat | None = Field(None, alias="maxSeconds")
    tol: PositiveFloat = 1e-12
    seed: NonNegativeInt = 0
    workers: PositiveInt = 1
    out_dir: Path = Field(Path("output"), alias="out")
    explosive_attested: bool = False

    def degree_model(self) -> DegreeModel:
        return self.degree.build()

    def weight_model(self) -> WeightModel:
        return self.weight.build()


def validate(config: ExperimentConfig) -> list[str]:
    """Regime preconditions the schema cannot express; empty when the config is usable."""
    violations: list[str] = []
    try:
        d = config.degree_model()
        config.weight_model()
    except ModelError as e:
        return [str(e)]

    if config.regime == "malthusian":
        try:
            nu = offspring_mean(d)
        except ModelError as e:
            return [str(e)]
        if math.isinf(nu):
            violations.append("infinite-mean offspring: Malthusian regime inapplicable")
        elif nu <= 1:
            violations.append(f"not supercritical (nu = {nu:.6g} <= 1)")
        if not is_regular(d):
            violations.append("degree law is not regular (E[D^2 log D] infinite)")
    elif not config.explosive_attested:
        violations.append(
            "explosive regime requires 'explosive_attested: true' "
            "(explosion cannot be certified automatically)"
        )
    if d.mean <= 0:
        violations.append("zero-mean degree law")
    return violations
