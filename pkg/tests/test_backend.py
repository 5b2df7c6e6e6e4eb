import pytest

from diffnormals import _backend, available_backends, default_backend


def test_python_always_available():
    assert "python" in available_backends()


def test_env_forces_python(monkeypatch):
    monkeypatch.setenv("DIFFNORMALS_BACKEND", "python")
    assert default_backend() == "python"
    assert _backend.resolve(None) is _backend._fallback


def test_env_auto_means_best(monkeypatch):
    monkeypatch.setenv("DIFFNORMALS_BACKEND", "auto")
    expected = "compiled" if "compiled" in available_backends() else "python"
    assert default_backend() == expected


def test_unknown_backend(monkeypatch):
    with pytest.raises(ValueError):
        _backend.resolve("gpu")
    monkeypatch.setenv("DIFFNORMALS_BACKEND", "gpu")
    with pytest.raises(ValueError):
        default_backend()
