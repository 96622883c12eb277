"""Command line front end.

Exit codes: 0 success, 2 validation failure, 3 degenerate inference
(no evidence / empty softmax), 1 internal error.  Set ``GMOD_COLOR=0``
to disable ANSI colour on the status line.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass

import click

from . import dsl, reporting
from .category import GmodError, set_tolerances
from .dsl import ModelFormatError
from .reporting import SpecError
from .updating import AllMinusInfinityError, EmptyResultError


@dataclass
class RunConfig:
    seed: int
    tol_channel: float | None
    tol_zero: float | None
    fmt: str = "json"


def _color_enabled() -> bool:
    return os.environ.get("GMOD_COLOR", "1") != "0"


def _echo_payload(payload: dict, fmt: str, csv_renderer) -> None:
    if fmt == "csv":
        click.echo(csv_renderer(payload), nl=False)
    else:
        click.echo(reporting.payload_text(payload), nl=False)


def _fail(code: str, message: str, exit_code: int) -> None:
    payload = {"error": {"code": code, "message": message}}
    click.echo(reporting.payload_text(payload), nl=False)
    sys.exit(exit_code)


def _guarded(fn):
    """Map engine errors onto the documented exit codes."""
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ModelFormatError as exc:
            payload = reporting.validation_payload(exc.diagnostics)
            click.echo(reporting.payload_text(payload), nl=False)
            sys.exit(2)
        except EmptyResultError as exc:
            _fail("EMPTY_RESULT", str(exc), 3)
        except AllMinusInfinityError as exc:
            _fail("ALL_MINUS_INFINITY", str(exc), 3)
        except (SpecError, GmodError) as exc:
            _fail("INVALID_INPUT", str(exc), 2)
        except OSError as exc:
            _fail("IO_ERROR", str(exc), 1)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for any randomised checks.")
@click.option("--tol-channel", type=float, default=None,
              help="Override the channel row-sum tolerance.")
@click.option("--tol-zero", type=float, default=None,
              help="Override the zero-support cutoff.")
@click.pass_context
def main(ctx, seed, tol_channel, tol_zero):
    """Validate, update and plan over finite generative models."""
    for name, value in (("--tol-channel", tol_channel), ("--tol-zero", tol_zero)):
        if value is not None and not value > 0:
            raise click.BadParameter(f"{name} must be positive")
    set_tolerances(zero=tol_zero, channel=tol_channel)
    ctx.obj = RunConfig(seed=seed, tol_channel=tol_channel, tol_zero=tol_zero)


@main.command()
@click.argument("path", type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json", show_default=True)
@_guarded
def validate(path, fmt):
    """Check a model document and report every diagnostic."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    diags = dsl.validate_text(text)
    payload = reporting.validation_payload(diags)
    _echo_payload(payload, fmt, reporting.validation_csv)
    if diags:
        click.secho("invalid", fg="red", err=True,
                    color=None if _color_enabled() else False)
        sys.exit(2)
    click.secho("valid", fg="green", err=True,
                color=None if _color_enabled() else False)


@main.command()
@click.argument("path", type=click.Path())
@click.option("--observe", required=True,
              help="A value label (sharp) or JSON array (soft).")
@click.option("--method", type=click.Choice(list(reporting.PERCEIVE_METHODS)),
              default="pearl", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json", show_default=True)
@_guarded
def perceive(path, observe, method, fmt):
    """Update the model's hidden-state beliefs from an observation."""
    model = reporting.load_model(path)
    shape = reporting.observation_shape(model)
    obs, warnings = reporting.parse_observation_spec(observe, shape)
    posterior = reporting.perceive_model(model, obs, method)
    payload = reporting.posterior_payload(posterior, warnings)
    _echo_payload(payload, fmt, reporting.posterior_csv)


@main.command()
@click.argument("path", type=click.Path())
@click.option("--observe", required=True,
              help="Present observation: value label or JSON array.")
@click.option("--prefer", required=True,
              help="Future preference: value label or JSON array.")
@click.option("--mode", type=click.Choice(list(reporting.PLAN_MODES)),
              default="exact", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json", show_default=True)
@_guarded
def plan(path, observe, prefer, mode, fmt):
    """Infer a plan over policies from an observation and preferences."""
    model = reporting.load_model(path)
    obs_shape, pref_shape = reporting.plan_shapes(model)
    obs, w1 = reporting.parse_observation_spec(observe, obs_shape)
    pref, w2 = reporting.parse_observation_spec(prefer, pref_shape)
    report = reporting.plan_model(model, obs, pref, mode)
    payload = reporting.plan_payload(report, w1 + w2)
    _echo_payload(payload, fmt, reporting.plan_csv)


@main.command()
@click.argument("path", type=click.Path())
@click.option("--q", "q_spec", default=None,
              help="Posterior over hidden states (JSON array or label).")
@click.option("--observe", default=None,
              help="Observation for a variational report.")
@click.option("--prefer", default=None,
              help="Preference for an expected-free-energy report.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json", show_default=True)
@_guarded
def fe(path, q_spec, observe, prefer, fmt):
    """Report free energy for a model against an observation or preference."""
    model = reporting.load_model(path)
    shape = reporting.observation_shape(model)
    obs = pref = None
    warnings: list[str] = []
    if observe is not None:
        obs, warnings = reporting.parse_observation_spec(observe, shape)
    if prefer is not None:
        pref, warnings = reporting.parse_observation_spec(prefer, shape)
    report = reporting.fe_model(model, q_spec, obs, pref)
    payload = reporting.fe_payload(report, warnings)
    _echo_payload(payload, fmt, reporting.fe_csv)


@main.command()
@click.argument("how", type=click.Choice(["seq", "par"]))
@click.argument("first", type=click.Path())
@click.argument("second", type=click.Path())
@click.option("-o", "--output", type=click.Path(), default=None,
              help="Write the composed document here instead of stdout.")
@_guarded
def compose(how, first, second, output):
    """Compose two model files in sequence or in parallel."""
    from .diagram import par_compose, seq_compose
    m1 = reporting.load_model(first)
    m2 = reporting.load_model(second)
    composed = seq_compose(m1, m2) if how == "seq" else par_compose(m1, m2)
    text = dsl.serialize(composed)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
