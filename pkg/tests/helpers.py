"""Scenario builders shared by the test modules."""
from __future__ import annotations

from importlib import resources

from thermodelam.scenario import parse_scenario


def bundled_text(name: str) -> str:
    return resources.files("thermodelam.scenarios").joinpath(f"{name}.toml").read_text()


def small_peel(nx: int = 16, ny: int = 8, tau: float = 0.04, coupling: str = "fixed_point"):
    text = (bundled_text("peel")
            .replace("nodes = [64]", f"nodes = [{nx}]")
            .replace("nodes_normal = [32, 32]", f"nodes_normal = [{ny}, {ny}]")
            .replace("tau = 0.01", f"tau = {tau}")
            .replace('coupling = "fixed_point"', f'coupling = "{coupling}"'))
    return parse_scenario(text, name="small-peel")
