"""This file contains the Thompson sampling pieces of Max-Rev-TS: building the prior, drawing an all-negative elasticity vector
by rejection, the conjugate posterior update from one day of revenue, and one sample-then-solve pricing step."""

import logging
from dataclasses import replace
import math

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from helpers.maxrev_helpers import solve
from models.errors import InsufficientDataError, InvalidInputError, RejectionLimitError
from models.posterior import DIAGONAL, NOISE_VAR_FLOOR, ElasticityPosterior

logger = logging.getLogger(__name__)

# Used in place of a sampled elasticity when the sampler gives up and the posterior mean is not negative enough.
FALLBACK_CEILING = -0.1


def init_posterior(config, size=None):
    """Prior N(prior_mean, prior_scale * I). A scalar prior mean needs size; a vector prior mean must match it."""

    if np.isscalar(config.prior_mean):
        if size is None:
            raise InvalidInputError("basket size is needed with a scalar prior mean")
        mean = np.full(size, float(config.prior_mean))
    else:
        mean = np.asarray(config.prior_mean, dtype=float)
        if size is not None and mean.shape[0] != size:
            raise InvalidInputError(f"prior mean has {mean.shape[0]} entries, basket has {size} items")
    if not config.prior_scale > 0:
        raise InvalidInputError(f"prior_scale must be positive, got {config.prior_scale}")

    size = mean.shape[0]
    mode = config.resolve_mode(size)
    covariance = np.full(size, config.prior_scale) if mode == DIAGONAL else config.prior_scale * np.eye(size)
    noise_var = config.noise_var if config.noise_var is not None else 1.0
    return ElasticityPosterior(mean, covariance, noise_var, config.ridge, mode)


def draw_elasticities(posterior, rng, max_rejections=1000):
    """Draws from the posterior until every coordinate is negative. Returns (sample, rejections). In diagonal mode the
    coordinates are independent, so only the offending ones are redrawn."""

    mean = posterior.mean
    rejections = 0

    if posterior.mode == DIAGONAL:
        scale = np.sqrt(posterior.variances())
        sample = mean + scale * rng.standard_normal(posterior.size)
        positive = sample >= 0
        while positive.any():
            rejections += 1
            if rejections >= max_rejections:
                raise RejectionLimitError(rejections)
            sample[positive] = mean[positive] + scale[positive] * rng.standard_normal(int(positive.sum()))
            positive = sample >= 0
        return sample, rejections

    factor = np.linalg.cholesky(posterior.covariance)
    while True:
        sample = mean + factor @ rng.standard_normal(posterior.size)
        if np.all(sample < 0):
            return sample, rejections
        rejections += 1
        if rejections >= max_rejections:
            raise RejectionLimitError(rejections)


def sample_elasticities(posterior, rng, max_rejections=1000):
    """A draw from the posterior conditioned on every elasticity being negative."""

    sample, _ = draw_elasticities(posterior, rng, max_rejections)
    return sample


def fallback_elasticities(posterior):
    """Posterior mean pushed below FALLBACK_CEILING coordinate by coordinate."""
    return np.minimum(posterior.mean, FALLBACK_CEILING)


def posterior_update(posterior, features, observed_revenue):
    """Folds one day of revenue into the posterior:
    precision' = precision + theta theta^T / sigma^2 + ridge I,
    mean' = covariance' (precision mean + (R - R_bar) theta / sigma^2).
    Diagonal mode keeps only the diagonal of the rank-one term and costs O(B)."""

    theta = np.asarray(features.theta, dtype=float)
    if theta.shape != (posterior.size,):
        raise InvalidInputError(f"theta has {theta.shape[0]} entries, posterior covers {posterior.size} items")
    if not math.isfinite(observed_revenue):
        raise InvalidInputError(f"observed revenue must be finite, got {observed_revenue}")

    signal = (observed_revenue - features.baseline_revenue) / posterior.noise_var

    if posterior.mode == DIAGONAL:
        prior_precision = 1.0 / posterior.variances()
        precision = prior_precision + theta ** 2 / posterior.noise_var + posterior.ridge
        covariance = 1.0 / precision
        mean = covariance * (prior_precision * posterior.mean + signal * theta)
        return replace(posterior, mean=mean, covariance=covariance, day=posterior.day + 1)

    identity = np.eye(posterior.size)
    prior_precision = cho_solve(cho_factor(posterior.covariance), identity)
    precision = prior_precision + np.outer(theta, theta) / posterior.noise_var + posterior.ridge * identity
    factor = cho_factor(precision)
    covariance = cho_solve(factor, identity)
    covariance = 0.5 * (covariance + covariance.T)
    mean = cho_solve(factor, prior_precision @ posterior.mean + signal * theta)
    return replace(posterior, mean=mean, covariance=covariance, day=posterior.day + 1)


def ts_step(posterior, basket, constraints, rng, max_rejections=1000):
    """Samples elasticities, puts them on the basket and solves Max-Rev. Returns (prices, sampled elasticities). If the
    sampler gives up, the clipped posterior mean is used instead."""

    if len(basket) != posterior.size:
        raise InvalidInputError(f"basket has {len(basket)} items, posterior covers {posterior.size}")
    try:
        sampled = sample_elasticities(posterior, rng, max_rejections)
    except RejectionLimitError as exc:
        logger.warning("%s; pricing with the clipped posterior mean", exc)
        sampled = fallback_elasticities(posterior)

    priced = [item.with_elasticity(gamma) for item, gamma in zip(basket, sampled)]
    return solve(priced, constraints).prices, sampled


def estimate_noise_var(history):
    """Unbiased sample variance of past basket revenues."""

    revenues = np.asarray(history, dtype=float)
    if revenues.shape[0] < 2:
        raise InsufficientDataError("need at least 2 revenue observations to estimate the noise variance")
    return float(np.var(revenues, ddof=1))


def floored_noise_var(history):
    return max(estimate_noise_var(history), NOISE_VAR_FLOOR)
