"""This file contains the Thompson sampling models: the Gaussian belief over a basket's elasticity vector and the settings the
sampler is run with."""

from dataclasses import dataclass

import numpy as np

from models.errors import InvalidInputError

FULL = "full"
DIAGONAL = "diagonal"
AUTO = "auto"

# Past this basket size the covariance is kept as its diagonal only.
DIAGONAL_THRESHOLD = 500
NOISE_VAR_FLOOR = 1e-6
CHECKPOINT_SCHEMA = "elasticity-posterior/1"


@dataclass(frozen=True)
class TSConfig:
    """Prior mean (a scalar applies to every item), prior covariance prior_scale * I, revenue noise variance (None means
    estimate it from observed revenue), the precision ridge added at every update, the rejection cap, and how often the
    buffered observations are folded into the posterior. forecast_threshold and warmup_days control the production-style
    variant: items forecast below the threshold are priced passively, and the first warmup_days are passive for everyone."""

    prior_mean: object = -1.5
    prior_scale: float = 0.25
    noise_var: float = None
    ridge: float = 0.0
    max_rejections: int = 1000
    update_period: int = 1
    mode: str = AUTO
    forecast_threshold: float = 0.0
    warmup_days: int = 0

    def __post_init__(self):
        if not np.isscalar(self.prior_mean):
            object.__setattr__(self, "prior_mean", tuple(float(value) for value in self.prior_mean))
        if not self.prior_scale > 0:
            raise InvalidInputError(f"prior_scale must be positive, got {self.prior_scale}")
        if self.noise_var is not None and not self.noise_var > 0:
            raise InvalidInputError(f"noise_var must be positive, got {self.noise_var}")
        if not self.ridge >= 0:
            raise InvalidInputError(f"ridge must be nonnegative, got {self.ridge}")
        if self.max_rejections < 1:
            raise InvalidInputError("max_rejections must be at least 1")
        if self.update_period < 1:
            raise InvalidInputError("update_period must be at least 1")
        if self.mode not in (AUTO, FULL, DIAGONAL):
            raise InvalidInputError(f"mode must be one of auto, full, diagonal, got {self.mode}")
        if self.forecast_threshold < 0 or self.warmup_days < 0:
            raise InvalidInputError("forecast_threshold and warmup_days must be nonnegative")

    def resolve_mode(self, size):
        if self.mode != AUTO:
            return self.mode
        return DIAGONAL if size > DIAGONAL_THRESHOLD else FULL


@dataclass(eq=False)
class ElasticityPosterior:
    """N(mean, covariance) over the elasticity vector. In diagonal mode covariance holds only the variances."""

    mean: np.ndarray
    covariance: np.ndarray
    noise_var: float
    ridge: float = 0.0
    mode: str = FULL
    day: int = 0

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)
        size = self.mean.shape[0]

        if self.mode == FULL:
            if self.covariance.shape != (size, size):
                raise InvalidInputError(f"covariance must be {size}x{size}")
            if not np.allclose(self.covariance, self.covariance.T, rtol=0, atol=1e-12 * (1 + np.abs(self.covariance).max())):
                raise InvalidInputError("covariance must be symmetric")
            try:
                np.linalg.cholesky(self.covariance)
            except np.linalg.LinAlgError as exc:
                raise InvalidInputError("covariance must be positive definite") from exc
        elif self.mode == DIAGONAL:
            if self.covariance.shape != (size,):
                raise InvalidInputError(f"diagonal covariance must hold {size} variances")
            if np.any(~(self.covariance > 0)):
                raise InvalidInputError("variances must be positive")
        else:
            raise InvalidInputError(f"unknown posterior mode {self.mode}")

        if not self.noise_var > 0:
            raise InvalidInputError(f"noise_var must be positive, got {self.noise_var}")
        if not self.ridge >= 0:
            raise InvalidInputError(f"ridge must be nonnegative, got {self.ridge}")

    @property
    def size(self):
        return self.mean.shape[0]

    def variances(self):
        return self.covariance if self.mode == DIAGONAL else np.diag(self.covariance)

    def to_dict(self):
        """Flat JSON-ready record. Floats go through repr, so from_dict(to_dict()) is exact."""

        if self.mode == FULL:
            covariance = self.covariance[np.triu_indices(self.size)].tolist()
        else:
            covariance = self.covariance.tolist()
        return {
            "schema": CHECKPOINT_SCHEMA,
            "mode": self.mode,
            "size": self.size,
            "day": self.day,
            "noise_var": float(self.noise_var),
            "ridge": float(self.ridge),
            "mean": self.mean.tolist(),
            "covariance": covariance,
        }

    @classmethod
    def from_dict(cls, record):
        """Rebuilds a posterior from to_dict output. Full-mode covariance is stored as its upper triangle, row by row."""

        if record.get("schema") != CHECKPOINT_SCHEMA:
            raise InvalidInputError(f"unsupported checkpoint schema {record.get('schema')!r}")
        size = int(record["size"])
        values = np.asarray(record["covariance"], dtype=float)
        if record["mode"] == FULL:
            rows, cols = np.triu_indices(size)
            if values.shape != rows.shape:
                raise InvalidInputError("checkpoint covariance has the wrong number of entries")
            covariance = np.zeros((size, size))
            covariance[rows, cols] = values
            covariance[cols, rows] = values
        else:
            covariance = values
        return cls(
            mean=np.asarray(record["mean"], dtype=float),
            covariance=covariance,
            noise_var=float(record["noise_var"]),
            ridge=float(record["ridge"]),
            mode=record["mode"],
            day=int(record["day"]),
        )
