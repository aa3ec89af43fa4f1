"""Global numerical settings (tolerances, dimension caps).

Settings live in a context variable so concurrent callers can override them
locally with :func:`config_context` without affecting each other.
"""

import os
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, fields, replace


def _default_max_dim() -> int:
    raw = os.environ.get("HOLEVO_MAX_DIM")
    if raw is None:
        return 4096
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"HOLEVO_MAX_DIM must be a positive integer, got {raw!r}")
    if value < 1:
        raise ValueError(f"HOLEVO_MAX_DIM must be a positive integer, got {raw!r}")
    return value


@dataclass(frozen=True)
class Settings:
    """Numerical policy shared by every module.

    ``eig_floor`` is relative to the largest eigenvalue of the operator being
    decomposed; ``pinv_floor`` is the relative cutoff for generalized inverses.
    """

    tol_herm: float = 1e-9
    tol_psd: float = 1e-9
    tol_trace: float = 1e-9
    tol_prob: float = 1e-9
    tol_norm: float = 1e-9
    tol_povm: float = 1e-9
    tol_support: float = 1e-9
    eig_floor: float = 1e-12
    pinv_floor: float = 1e-10
    max_dim: int = 4096
    opt_tol: float = 1e-7
    max_iter: int = 10000
    debug: bool = False


_settings: ContextVar[Settings] = ContextVar(
    "holevo_settings", default=Settings(max_dim=_default_max_dim())
)


def get_config() -> Settings:
    """Return the settings active in the current context."""
    return _settings.get()


def set_config(**overrides) -> Settings:
    """Replace settings for the current context; returns the new settings."""
    _check_keys(overrides)
    new = replace(_settings.get(), **overrides)
    _settings.set(new)
    return new


@contextmanager
def config_context(**overrides):
    """Temporarily override settings.

    >>> with config_context(opt_tol=1e-9):
    ...     pass
    """
    _check_keys(overrides)
    token = _settings.set(replace(_settings.get(), **overrides))
    try:
        yield _settings.get()
    finally:
        _settings.reset(token)


def _check_keys(overrides):
    known = {f.name for f in fields(Settings)}
    unknown = set(overrides) - known
    if unknown:
        raise TypeError(f"unknown setting(s): {', '.join(sorted(unknown))}")
