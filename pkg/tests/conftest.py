"""Shared pytest fixtures for the cpathlab test suite."""

import numpy as np
import pytest

from cpathlab.builtin_instances import builtin_instance
from cpathlab.instance_registry import InstanceRegistry
from cpathlab.nsdp_model import qmi_instance


@pytest.fixture(autouse=True)
def patch_dirs(monkeypatch, tmp_path):
    """Patch platformdirs' user_cache_dir and user_config_dir to use unique temporary directories for each test."""
    cache_dir = tmp_path / "cache"
    config_dir = tmp_path / "config"
    monkeypatch.setattr("cpathlab.config.user_cache_dir", lambda app_name: str(cache_dir))
    monkeypatch.setattr("cpathlab.config.user_config_dir", lambda app_name: str(config_dir))
    return tmp_path


@pytest.fixture
def rng():
    """Return a seeded random generator."""
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def registry():
    """Return a self-checked registry shared by the session."""
    return InstanceRegistry()


@pytest.fixture
def deg_twin():
    """Return the deg-twin builtin (f = x, G = xI₂, x* = 0)."""
    return builtin_instance("deg-twin")


@pytest.fixture
def deg_mixed():
    """Return the deg-mixed builtin (r* = 1, one equality constraint)."""
    return builtin_instance("deg-mixed")


@pytest.fixture
def nondeg_control():
    """Return the nondegenerate control builtin."""
    return builtin_instance("nondeg-control")


@pytest.fixture
def curved_qmi():
    """Return a small QMI with a quadratic G and a curved equality constraint."""
    A0 = np.diag([1.0, 2.0])
    A = np.array([[[1.0, 0.5], [0.5, 0.0]], [[0.0, 1.0], [1.0, -1.0]]])
    B = np.zeros((2, 2, 2, 2))
    B[0, 1] = B[1, 0] = np.array([[0.0, 1.0], [1.0, 0.0]])
    B[1, 1] = np.eye(2)
    return qmi_instance(
        "curved", A0, A, c=np.array([1.0, -1.0]), Q=np.array([[2.0, 0.5], [0.5, 1.0]]),
        H=np.array([[1.0, 1.0]]), b=np.array([0.1]), B=B, M=np.array([[[1.0, 0.0], [0.0, -1.0]]]),
    )
