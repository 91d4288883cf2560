"""``catnet`` command line: compile, verify, bench and catalog checks.

Exit codes: 0 success, 1 I/O or parse failure, 2 usage or validation error,
3 certificate violation.
"""
from __future__ import annotations

import csv
import io
import json
import os
import sys
import tempfile
import time

import click

from . import apps
from .catalog import catalog_from_dict, preset_catalog, validate_catalog
from .compiler import CompileError, CompiledNetwork, compile_auto
from .network import CatalogNetwork
from .skeleton import ResourceLimitError, ShapeError
from .verify import CSV_HEADER, VerificationError, check_certificates

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_CERT = 0, 1, 2, 3


class CliFailure(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fail(message: str, code: int):
    raise CliFailure(message, code)


# -- I/O ------------------------------------------------------------------------------------

def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        _fail(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO)
    except json.JSONDecodeError as exc:
        _fail(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", EXIT_IO)


def _emit(text: str, out: str | None):
    """Write ``text`` to ``out`` atomically (temp file + rename), or to stdout."""
    if out is None:
        click.echo(text, nl=not text.endswith("\n"))
        return
    directory = os.path.dirname(os.path.abspath(out))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".catnet-", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except OSError as exc:
        _fail(f"cannot write {out}: {exc.strerror or exc}", EXIT_IO)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(rows)
    return buf.getvalue()


def _parse_params(items) -> dict:
    params = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            _fail(f"--param expects key=value, got {item!r}", EXIT_USAGE)
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    return params


def _run(fn):
    """Map library exceptions onto exit codes."""
    try:
        code = fn()
    except CliFailure as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.code)
    except ResourceLimitError as exc:
        click.echo(f"error: resource limit: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    except (CompileError, apps.PresetError, ShapeError, VerificationError, ValueError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    sys.exit(code or EXIT_OK)


# -- shared option sets ---------------------------------------------------------------------------

def _preset(name: str, d: int | None, params: dict) -> apps.ApplicationPreset:
    if d is not None:
        params = dict(params, d=d)
    return apps.build_application(name, params)


def _load_spec(spec_path: str, catalog_path: str | None) -> CatalogNetwork:
    data = _read_json(spec_path)
    if catalog_path is not None:
        cat_data = _read_json(catalog_path)
    elif isinstance(data, dict) and "catalog" in data:
        cat_data = data["catalog"]
    else:
        _fail("--spec needs --catalog (or a 'catalog' entry in the spec)", EXIT_USAGE)
    if not isinstance(data, dict) or "layers" not in data:
        _fail(f"{spec_path}: expected an object with a 'layers' list", EXIT_IO)
    return CatalogNetwork.from_dict(data, catalog_from_dict(cat_data))


def _report_output(reports, fmt: str) -> str:
    if fmt == "csv":
        return _csv([r.csv_row() for r in reports])
    body = [r.to_dict() for r in reports]
    return _dumps(body[0] if len(body) == 1 else body)


common_sampling = [
    click.option("--samples", type=click.IntRange(min=1), default=10_000, show_default=True,
                 help="Sample budget for error and Lipschitz checks."),
    click.option("--grid", type=click.IntRange(min=2), default=None,
                 help="Grid points per dimension (default ceil(samples^(1/d)))."),
    click.option("--seed", type=int, default=0, show_default=True),
]


def _apply(options):
    def deco(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return deco


# -- commands ---------------------------------------------------------------------------------

@click.group()
@click.version_option(package_name="artifact")
def main():
    """Compile catalog networks into certified ReLU networks and check the certificates."""


@main.command("compile")
@click.option("--preset", type=click.Choice(sorted(apps.PRESETS)), default=None)
@click.option("--spec", "spec_path", type=str, default=None, help="Catalog network JSON.")
@click.option("--catalog", "catalog_path", type=str, default=None, help="Catalog JSON.")
@click.option("--epsilon", type=float, required=True)
@click.option("--d", "d", type=int, default=None, help="Input dimension for presets.")
@click.option("--param", "param_items", multiple=True, help="Preset parameter key=value.")
@click.option("--low-dim", type=int, default=None, help="Use the low-dimensional bound with this d.")
@click.option("--out", type=str, default=None)
def cmd_compile(preset, spec_path, catalog_path, epsilon, d, param_items, low_dim, out):
    """Compile a preset or a JSON catalog network to accuracy EPSILON."""

    def run():
        if (preset is None) == (spec_path is None):
            _fail("give exactly one of --preset or --spec", EXIT_USAGE)
        params = _parse_params(param_items)
        if preset is not None:
            ap = _preset(preset, d, params)
            compiled = ap.compile(epsilon)
            doc = compiled.to_dict()
            doc["source"]["preset"] = {"name": ap.name, "params": ap.params}
        else:
            xi = _load_spec(spec_path, catalog_path)
            compiled = compile_auto(xi, epsilon, low_dim=low_dim)
            doc = compiled.to_dict()
        _emit(json.dumps(doc, sort_keys=True) + "\n", out)
        cert = compiled.certificate()
        summary = (f"params {cert['params_actual']} <= bound {cert['param_bound']:.6g}; "
                   f"eta {cert['eta']:.6g}{' (clamped)' if cert['eta_clamped'] else ''}; "
                   f"lipschitz {cert['lipschitz']:.6g}; variant {cert['variant']}")
        click.echo(summary, err=out is None)
        return EXIT_OK

    _run(run)


@main.command("verify")
@click.argument("compiled_path")
@_apply(common_sampling)
@click.option("--radius", type=float, default=None,
              help="Check on [-radius, radius]^d (default: the preset's box, else 1).")
@click.option("--out", type=str, default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
def cmd_verify(compiled_path, samples, grid, seed, radius, out, fmt):
    """Check a compiled network's certificates against its source network."""

    def run():
        data = _read_json(compiled_path)
        try:
            compiled = CompiledNetwork.from_dict(data)
        except (ValueError, KeyError) as exc:
            _fail(f"{compiled_path}: {exc}", EXIT_IO)
        recorded = int(data["certificate"].get("params_actual", -1))
        box, prop_bound, dim = None, None, None
        preset = data.get("source", {}).get("preset")
        if preset is not None:
            ap = apps.build_application(preset["name"], preset["params"])
            box, dim = ap.domain_box, ap.d
            prop_bound = ap.bound(compiled.epsilon)
        if radius is not None:
            n = compiled.source.in_dim
            box = ((-radius,) * n, (radius,) * n)
        report = check_certificates(compiled, box=box, samples=samples, seed=seed, grid=grid,
                                    prop_bound=prop_bound, d=dim, params_recorded=recorded)
        _emit(_report_output([report], fmt), out)
        if not report.passed:
            click.echo("certificate violation", err=True)
            return EXIT_CERT
        return EXIT_OK

    _run(run)


@main.command("bench")
@click.option("--preset", type=click.Choice(sorted(apps.PRESETS)), required=True)
@click.option("--d", "dims", type=int, multiple=True, help="Dimension (repeatable).")
@click.option("--epsilon", "epsilons", type=float, multiple=True, help="Accuracy (repeatable).")
@click.option("--param", "param_items", multiple=True, help="Preset parameter key=value.")
@_apply(common_sampling)
@click.option("--out", type=str, default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv", show_default=True)
def cmd_bench(preset, dims, epsilons, param_items, samples, grid, seed, out, fmt):
    """Sweep a preset over dimensions and accuracies; one row per (d, epsilon)."""

    def run():
        if not epsilons:
            _fail("bench needs at least one --epsilon", EXIT_USAGE)
        if not dims:
            _fail("bench needs at least one --d", EXIT_USAGE)
        params = _parse_params(param_items)
        reports, code = [], EXIT_OK
        for d in dims:
            ap = _preset(preset, d, params)
            for eps in epsilons:
                t0 = time.perf_counter()
                compiled = ap.compile(eps)
                report = check_certificates(compiled, box=ap.domain_box, samples=samples, seed=seed,
                                            grid=grid, prop_bound=ap.bound(eps), d=d)
                report.runtime_ms = (time.perf_counter() - t0) * 1e3
                reports.append(report)
                if not report.passed:
                    code = EXIT_CERT
        _emit(_report_output(reports, fmt), out)
        return code

    _run(run)


@main.command("check-catalog")
@click.option("--catalog", "catalog_path", type=str, default=None, help="Catalog JSON.")
@click.option("--preset-catalog", "preset_catalog_name", type=str, default=None, help="Preset catalog name.")
@click.option("--param", "param_items", multiple=True, help="Catalog parameter key=value.")
@click.option("--delta", "deltas", type=float, multiple=True,
              help="Accuracies to test (default: threshold and threshold/10).")
@click.option("--samples", type=click.IntRange(min=1), default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=str, default=None)
def cmd_check_catalog(catalog_path, preset_catalog_name, param_items, deltas, samples, seed, out):
    """Validate every builder in a catalog against its declared constants."""

    def run():
        if (catalog_path is None) == (preset_catalog_name is None):
            _fail("give exactly one of --catalog or --preset-catalog", EXIT_USAGE)
        if catalog_path is not None:
            cat = catalog_from_dict(_read_json(catalog_path))
        else:
            cat = preset_catalog(preset_catalog_name, _parse_params(param_items))
        grid = deltas or (cat.threshold, cat.threshold / 10)
        report = validate_catalog(cat, grid, sample_budget=samples, seed=seed)
        _emit(_dumps(report.to_dict()), out)
        return EXIT_OK if report.passed else EXIT_CERT

    _run(run)


if __name__ == "__main__":  # pragma: no cover
    main()
