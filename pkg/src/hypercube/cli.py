"""Command-line interface.

Every subcommand reads defaults from an optional INI config file (one
section per subcommand, keys named like the long options with dashes or
underscores) and lets command-line flags override them.  ``--show-config``
prints the resolved settings of a subcommand as such a section and exits.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime
failure, 3 no crossing found by ``threshold``.
"""

from __future__ import annotations

import configparser
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import experiments as ex
from .circuits import (
    build_cnot_experiment, build_ect, build_ed_gadget, build_ft_zero_encoder, build_zero_encoder,
    build_zero_encoder_642,
)
from .code import MAX_LEVEL, build_code, code_params
from .decoders import DECODERS, DecoderConfig, hard_decode_batch, md_decode_batch, parse_bits, soft_decode_batch
from .decoders.base import DEFAULT_M_TH, DEFAULT_N_TH

OUTPUT_ENV = "HYPERCUBE_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_NO_CROSSING = 0, 1, 2, 3


class NoCrossing(Exception):
    pass


# --- parsing helpers -----------------------------------------------------

def parse_rates(text: str, spacing: str = "lin") -> list[float]:
    """``start:stop:count`` (linear or log spaced) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            start, stop, count = float(start), float(stop), int(count)
            if count < 1 or start < 0 or stop < start:
                raise ValueError
            if count == 1:
                return [start]
            if spacing == "log":
                if start <= 0:
                    raise ValueError
                values = np.geomspace(start, stop, count)
            else:
                values = np.linspace(start, stop, count)
            return [float(f"{v:.10g}") for v in values]
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"invalid rate grid {text!r}; use start:stop:count or a list") from None
    if not values or any(not 0 <= v <= 1 for v in values):
        raise click.BadParameter(f"rates must be probabilities: {text!r}")
    return values


def parse_levels(text: str) -> list[int]:
    try:
        levels = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"invalid level list {text!r}") from None
    if not levels or any(not 1 <= lv <= MAX_LEVEL for lv in levels):
        raise click.BadParameter(f"levels must lie in 1..{MAX_LEVEL}")
    return levels


def parse_caps(text: str) -> dict[int, int]:
    """``level=cap`` pairs, e.g. ``3=100000,4=100000``; ``none`` disables caps."""
    if str(text).strip().lower() in ("", "none"):
        return {}
    out = {}
    try:
        for part in str(text).split(","):
            lvl, cap = part.split("=")
            out[int(lvl)] = int(cap)
    except ValueError:
        raise click.BadParameter(f"invalid cap list {text!r}; expected level=value pairs") from None
    return out


def _caps_text(caps: dict) -> str:
    return ",".join(f"{k}={v}" for k, v in sorted(caps.items())) or "none"


def _decoder_cfg(params) -> DecoderConfig:
    try:
        return DecoderConfig(mode=params.get("mode", "correct"), detect_level=params.get("detect_level", 1),
                             n_th=parse_caps(params.get("n_th", _caps_text(DEFAULT_N_TH))),
                             m_th=parse_caps(params.get("m_th", _caps_text(DEFAULT_M_TH))),
                             p_e=params.get("p_e") or 0.01)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None


def _output_dir(path: str | None) -> Path:
    out = Path(path or os.environ.get(OUTPUT_ENV) or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise click.BadParameter(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise click.BadParameter(f"output directory {out} is not writable")
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    click.echo(f"wrote {path}", err=True)


# --- config file and --show-config ---------------------------------------

def _load_config(path: str) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise click.BadParameter(f"cannot read config {path}: {exc}") from None
    # empty values mean "use the built-in default"
    return {section: {key.replace("-", "_"): value for key, value in parser.items(section) if value != ""}
            for section in parser.sections()}


def _config_callback(ctx, param, value):
    if value:
        ctx.default_map = _load_config(value)
    return value


def _show_config(ctx: click.Context) -> None:
    click.echo(f"[{ctx.info_name}]")
    for param in ctx.command.params:
        key = param.name
        if key == "show_config" or key not in ctx.params:
            continue
        value = ctx.params[key]
        if isinstance(value, tuple):
            value = ",".join(map(str, value))
        click.echo(f"{key.replace('_', '-')} = {'' if value is None else value}")


def common(func):
    """Options every subcommand shares."""
    func = click.option("--show-config", is_flag=True, help="Print the resolved settings and exit.")(func)
    return func


def _maybe_show(ctx) -> bool:
    if ctx.params.get("show_config"):
        _show_config(ctx)
        return True
    return False


def decoder_options(func):
    for opt in reversed([
        click.option("--mode", type=click.Choice(["correct", "detect"]), default="correct", show_default=True),
        click.option("--detect-level", type=click.IntRange(min=1), default=1, show_default=True,
                     help="L_D: lowest level whose candidate count must be one in detect mode."),
        click.option("--n-th", default=_caps_text(DEFAULT_N_TH), show_default=True,
                     help="Candidate-product caps per level, e.g. 3=100000,4=100000."),
        click.option("--m-th", default=_caps_text(DEFAULT_M_TH), show_default=True,
                     help="Candidate-sum caps per level, e.g. 2=6,3=12."),
        click.option("--p-e", type=click.FloatRange(0, 0.5), default=None,
                     help="Channel estimate for the soft decoder (defaults to the flip rate)."),
    ]):
        func = opt(func)
    return func


# --- commands --------------------------------------------------------------

@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", type=click.Path(dir_okay=False), callback=_config_callback, is_eager=True,
              expose_value=False, help="INI file with one section of defaults per subcommand.")
def cli():
    """Many-hypercube code tools: code construction, decoding, circuits and simulations."""


@cli.command()
@click.option("--level", type=click.IntRange(1, MAX_LEVEL), default=1, show_default=True)
@click.option("--verbose", is_flag=True, help="Also print generator and logical-operator counts.")
@common
@click.pass_context
def codegen(ctx, level, verbose, show_config):
    """Print the code parameters [[n,k,d]] and rate."""
    if _maybe_show(ctx):
        return
    p = code_params(level)
    click.echo(f"[[{p.n},{p.k},{p.d}]] rate={p.k / p.n:.4f}")
    if verbose:
        t = build_code(level)
        click.echo(f"z-generators={len(t.hz)} x-generators={len(t.hx)} logical-qubits={t.k}")
        for m in range(1, level + 1):
            click.echo(f"  level-{m} generators per type: {int((t.generator_levels == m).sum())}")


@cli.command()
@click.option("--level", type=click.IntRange(1, MAX_LEVEL), default=1, show_default=True)
@click.option("--decoder", type=click.Choice(DECODERS), default="md", show_default=True)
@decoder_options
@click.option("--seed", type=int, default=0, show_default=True, help="Tie-breaking seed.")
@click.option("--distance", "show_distance", is_flag=True, help="Append the md distance to each line.")
@click.option("--input", "input_path", type=click.Path(dir_okay=False), default=None,
              help="Read outcome strings from a file instead of stdin.")
@common
@click.pass_context
def decode(ctx, level, decoder, mode, detect_level, n_th, m_th, p_e, seed, show_distance, input_path,
           show_config):
    """Decode bit strings (one per line) of 6**level outcomes into logical bits.

    Prints the logical string per line, or F when an error is detected.
    """
    if _maybe_show(ctx):
        return
    cfg = _decoder_cfg(ctx.params)
    try:
        text = Path(input_path).read_text() if input_path else sys.stdin.read()
    except OSError as exc:
        raise click.BadParameter(f"cannot read input: {exc}") from None
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    try:
        bits = np.array([parse_bits(ln) for ln in lines], dtype=np.uint8).reshape(len(lines), -1)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None
    if len(lines) and bits.shape[1] != 6**level:
        raise click.BadParameter(f"expected {6**level} bits per line for level {level}")
    if not len(lines):
        return
    rng = np.random.default_rng(seed)
    dist = None
    if decoder == "hard":
        logical, detected = hard_decode_batch(bits, level, mode=mode, rng=rng)
    elif decoder == "soft":
        if mode == "detect":
            raise click.BadParameter("the soft decoder has no detect mode")
        logical = soft_decode_batch(bits, level, cfg.p_e if p_e is not None else 0.01)
        detected = np.zeros(len(bits), dtype=bool)
    else:
        logical, dist, detected, _ = md_decode_batch(bits, level, cfg, rng=rng)
    for i in range(len(bits)):
        out = "F" if detected[i] else "".join(map(str, logical[i].astype(int)))
        if show_distance and dist is not None and not detected[i]:
            out += f" d={int(dist[i])}"
        click.echo(out)


CIRCUIT_KINDS = ("zero-encoder", "ghz-encoder", "arbitrary-encoder", "ft-encoder", "edx", "edz", "ect", "cnot")


@cli.command("emit-circuit")
@click.option("--kind", type=click.Choice(CIRCUIT_KINDS), default="ft-encoder", show_default=True)
@click.option("--level", type=click.IntRange(1, 4), default=1, show_default=True)
@click.option("--rounds", type=click.IntRange(min=0), default=10, show_default=True,
              help="CNOT rounds of the cnot benchmark (even).")
@click.option("--max-attempts", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--stats", is_flag=True, help="Print operation counts instead of the circuit text.")
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Write to a file.")
@common
@click.pass_context
def emit_circuit(ctx, kind, level, rounds, max_attempts, stats, output, show_config):
    """Write a circuit in the line-based text format."""
    if _maybe_show(ctx):
        return
    try:
        if kind == "zero-encoder":
            c = build_zero_encoder(level)
        elif kind == "ghz-encoder":
            c = build_zero_encoder_642()
        elif kind == "arbitrary-encoder":
            c = build_zero_encoder_642(arbitrary=True)
        elif kind == "ft-encoder":
            c = build_ft_zero_encoder(level, max_attempts)
        elif kind in ("edx", "edz"):
            c = build_ed_gadget(kind, level)
        elif kind == "ect":
            c = build_ect(level, max_attempts=max_attempts)
        else:
            c, _ = build_cnot_experiment(level, rounds, max_attempts=max_attempts)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None
    if stats:
        text = "".join(f"{k} {v}\n" for k, v in sorted(c.count().items()))
        text = f"qubits {c.num_qubits}\nslots {c.num_classical}\n" + text
    else:
        text = c.to_text()
    if output:
        try:
            Path(output).write_text(text)
        except OSError as exc:
            raise click.BadParameter(f"cannot write {output}: {exc}") from None
    else:
        click.echo(text, nl=False)


def _trial_options(func):
    for opt in reversed([
        click.option("--trials", type=click.IntRange(min=1), default=ex.DEFAULT_TRIAL_CAP, show_default=True,
                     help="Trial cap per cell."),
        click.option("--target-failures", type=click.IntRange(min=0), default=ex.DEFAULT_TARGET_FAILURES,
                     show_default=True, help="Stop a cell after this many failures (0: run the full cap)."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--output-dir", type=click.Path(file_okay=False), default=None,
                     help=f"Directory for CSV/JSON output (default ${OUTPUT_ENV} or .)."),
    ]):
        func = opt(func)
    return func


def _summary_line(r: ex.ExperimentResult) -> str:
    line = (f"L={r.level} decoder={r.decoder} rate={r.error_rate:.6g} trials={r.trials} "
            f"failures={r.failures} p_fail={r.p_fail:.4e} stderr={r.stderr:.2e}")
    if r.kind == "cnot":
        line += f" discarded={r.discarded}"
        if r.p_fail < 1:
            _, _, pc, dc = r.cnot_stats()
            line += f" p_cnot={pc:.4e}+-{dc:.1e}"
    return line


@cli.command("sim-bitflip")
@click.option("--level", type=click.IntRange(1, MAX_LEVEL), default=2, show_default=True)
@click.option("--decoder", type=click.Choice(DECODERS), default="md", show_default=True)
@click.option("--rate", type=click.FloatRange(0, 1), default=0.05, show_default=True, help="p_flip.")
@_trial_options
@decoder_options
@common
@click.pass_context
def sim_bitflip(ctx, level, decoder, rate, trials, target_failures, seed, output_dir, mode, detect_level,
                n_th, m_th, p_e, show_config):
    """One bit-flip cell: ideal zero state, random flips, decode."""
    if _maybe_show(ctx):
        return
    out = _output_dir(output_dir)
    cfg = _decoder_cfg(ctx.params)
    r = ex.run_bitflip(level, decoder, rate, trials, seed, target_failures=target_failures or None, cfg=cfg,
                       p_e=p_e)
    click.echo(_summary_line(r))
    _write(out / f"bitflip-L{level}-{decoder}.csv", ex.results_to_csv([r]))


@cli.command("sim-cnot")
@click.option("--level", type=click.IntRange(1, 3), default=1, show_default=True)
@click.option("--rate", type=click.FloatRange(0, 1), default=1e-3, show_default=True, help="p_circ.")
@click.option("--rounds", type=click.IntRange(min=2), default=10, show_default=True,
              help="Even number of CNOT rounds.")
@click.option("--max-attempts", type=click.IntRange(min=1), default=1000, show_default=True)
@_trial_options
@common
@click.pass_context
def sim_cnot(ctx, level, rate, rounds, max_attempts, trials, target_failures, seed, output_dir, show_config):
    """One circuit-level cell of the logical-CNOT benchmark."""
    if _maybe_show(ctx):
        return
    out = _output_dir(output_dir)
    r = ex.run_cnot(level, rate, trials, seed, target_failures=target_failures or None, rounds=rounds,
                    max_attempts=max_attempts)
    click.echo(_summary_line(r))
    _write(out / f"cnot-L{level}.csv", ex.results_to_csv([r]))


@cli.command()
@click.option("--kind", type=click.Choice(["bitflip", "cnot"]), default="bitflip", show_default=True)
@click.option("--levels", default="2,3", show_default=True, help="Comma-separated levels.")
@click.option("--decoder", "decoders", default="md", show_default=True, help="Comma-separated decoders.")
@click.option("--rates", default="0.02:0.08:7", show_default=True, help="start:stop:count or a list.")
@click.option("--spacing", type=click.Choice(["lin", "log"]), default="lin", show_default=True)
@click.option("--max-attempts", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker processes; cells run in parallel.")
@click.option("--window", type=click.IntRange(min=2), default=5, show_default=True, help="Fit window.")
@click.option("--bootstrap", type=click.IntRange(min=0), default=200, show_default=True)
@_trial_options
@decoder_options
@common
@click.pass_context
def sweep(ctx, kind, levels, decoders, rates, spacing, max_attempts, jobs, window, bootstrap, trials,
          target_failures, seed, output_dir, mode, detect_level, n_th, m_th, p_e, show_config):
    """Grid of cells over levels x decoders x rates; writes sweep.csv and sweep.json."""
    if _maybe_show(ctx):
        return
    level_list = parse_levels(levels)
    dec_list = [d.strip() for d in decoders.split(",") if d.strip()]
    if not dec_list or any(d not in DECODERS for d in dec_list):
        raise click.BadParameter(f"decoders must be among {DECODERS}")
    if kind == "cnot" and (dec_list != ["md"] or max(level_list) > 3):
        raise click.BadParameter("the CNOT benchmark uses the md decoder at levels 1..3")
    rate_list = parse_rates(rates, spacing)
    out = _output_dir(output_dir)
    spec = ex.SweepSpec(kind, tuple(level_list), tuple(dec_list), tuple(rate_list), trials,
                        target_failures or None, seed, max_attempts, _decoder_cfg(ctx.params), p_e)
    results = ex.run_sweep(spec, jobs, progress=lambda r: click.echo(_summary_line(r)))
    _write(out / "sweep.csv", ex.results_to_csv(results))
    _write(out / "sweep.json", ex.summary_json(results, window=window, bootstrap=bootstrap, seed=seed))


def _read_results(path: str, kind: str):
    try:
        return ex.results_from_csv(Path(path).read_text(), kind)
    except (OSError, KeyError, ValueError) as exc:
        raise click.BadParameter(f"cannot read results from {path}: {exc}") from None


@cli.command()
@click.option("--input", "input_path", type=click.Path(dir_okay=False), required=True, help="Sweep CSV.")
@click.option("--kind", type=click.Choice(["bitflip", "cnot"]), default="bitflip", show_default=True)
@click.option("--window", type=click.IntRange(min=2), default=5, show_default=True)
@click.option("--start", type=click.IntRange(min=0), default=0, show_default=True,
              help="Skip this many lowest-rate points before the window.")
@common
@click.pass_context
def fit(ctx, input_path, kind, window, start, show_config):
    """Power-law exponents per (level, decoder) from a sweep CSV.

    Rows with zero failures are skipped.  For CNOT sweeps the fit uses the
    per-gate rate p_CNOT.
    """
    if _maybe_show(ctx):
        return
    results = _read_results(input_path, kind)
    groups: dict = {}
    for r in results:
        if r.failures > 0:
            y = r.cnot_stats()[2] if kind == "cnot" else r.p_fail
            groups.setdefault((r.level, r.decoder), []).append((r.error_rate, y))
    if not groups:
        raise click.BadParameter("no rows with failures to fit")
    for (level, dec), pts in sorted(groups.items()):
        try:
            f = ex.fit_exponent(pts, window, start)
        except ValueError as exc:
            click.echo(f"L={level} decoder={dec} fit unavailable: {exc}")
            continue
        click.echo(f"L={level} decoder={dec} exponent={f.exponent:.4f} prefactor={f.prefactor:.4e} "
                   f"points={f.points_used} residual={f.residual:.3e}")


@cli.command()
@click.option("--input", "input_path", type=click.Path(dir_okay=False), required=True, help="Sweep CSV.")
@click.option("--kind", type=click.Choice(["bitflip", "cnot"]), default="bitflip", show_default=True)
@click.option("--decoder", default="md", show_default=True)
@click.option("--levels", default="3,4", show_default=True, help="Two levels to intersect.")
@click.option("--bootstrap", type=click.IntRange(min=0), default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@common
@click.pass_context
def threshold(ctx, input_path, kind, decoder, levels, bootstrap, seed, show_config):
    """Crossing point of two level curves; exit code 3 when they do not cross."""
    if _maybe_show(ctx):
        return
    lv = parse_levels(levels)
    if len(lv) != 2:
        raise click.BadParameter("threshold needs exactly two levels")
    results = [r for r in _read_results(input_path, kind) if r.decoder == decoder]
    curves = []
    for level in lv:
        rows = [r for r in results if r.level == level]
        if kind == "cnot":
            rows = [(r.error_rate, r.cnot_stats()[2], r.trials) for r in rows if r.p_fail < 1]
        curves.append(rows)
    if any(len(c) < 2 for c in curves):
        raise click.BadParameter(f"need at least two points per level for decoder {decoder}")
    res = ex.estimate_threshold(curves[0], curves[1], bootstrap=bootstrap, seed=seed)
    if not res.crossed:
        raise NoCrossing(f"levels {lv[0]} and {lv[1]} do not cross in the sampled range")
    line = f"threshold={res.value:.5g}"
    if res.stderr is not None:
        line += f" stderr={res.stderr:.2g} ci95=[{res.low:.5g},{res.high:.5g}] crossed={res.crossed_fraction:.2f}"
    click.echo(line)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="hypercube", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_RUNTIME
    except click.UsageError as exc:
        exc.show()
        return EXIT_INVALID
    except click.ClickException as exc:
        exc.show()
        return EXIT_INVALID
    except NoCrossing as exc:
        click.echo(f"no crossing: {exc}", err=True)
        return EXIT_NO_CROSSING
    except (OSError, RuntimeError, MemoryError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
