"""Skin-stretch haptics toolkit: render, simulate, measure and inspect.

Exit codes: 0 success, 1 usage, 2 bad input data, 3 runtime contract
violation (including non-convergent staircases and decoder crashes).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (config_hash, quad_params_from_config, quad_params_to_config, read_config,
                     squeezer_params_from_config, squeezer_params_to_config)
from .core import Side, StretchType, ZERO_FORCE
from .device import PidGains, QuadSimulator, SqueezerSimulator
from .errors import ContractViolation, HapticError, InputError
from .protocol import (CommandFrame, FrameDecoder, annotate_frame, decode_stream, encode_frame,
                       fuzz_decoder, loopback_session)
from .psychophysics import (REFERENCE_LEVEL, MEASURED_JND, ChannelObserver, SimulatedObserver,
                            calibrated_channel_observer, confusion_experiment, run_staircase,
                            staircase_summary, stimulus_set, write_trial_log)
from .scenarios import Scenario, ScenarioConfig, load_trajectory, scenario_inputs
from .squeeze import SqueezeCalibration, render_force, render_value
from .stretch import RenderScheme1D, RenderScheme3D, render_1dof, render_3dof
from .trace import Trace

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3
TOOL = f"quadstretch {__version__}"
SCHEMES = {s.value: s for s in (*RenderScheme1D, *RenderScheme3D)}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _output_path(out_dir: str, name: str, force: bool) -> Path:
    path = Path(out_dir) / name
    if path.exists() and not force:
        raise UsageError(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _load_cfg(path) -> dict:
    return read_config(path) if path else {}


def _stamp(meta_cfg: dict, seed) -> dict:
    return {"tool": TOOL, "config_hash": config_hash(meta_cfg), "seed": seed}


# --- render ---------------------------------------------------------------------

def _pick_scheme(name, scenario: Scenario):
    if name is None:
        return (RenderScheme1D.ALL_CONTRACT if scenario.dof == 1
                else RenderScheme3D.CONTRACT_TOWARDS_FORCE)
    scheme = SCHEMES[name]
    expected = RenderScheme1D if scenario.dof == 1 else RenderScheme3D
    if not isinstance(scheme, expected):
        raise UsageError(f"scheme {name} does not apply to the {scenario.dof}-DoF "
                         f"scenario {scenario.value}")
    return scheme


def render_trace(samples, scenario_cfg: ScenarioConfig, device: str, scheme,
                 cfg: dict) -> tuple[Trace, list[CommandFrame]]:
    """Per-sample trace of scenario input, control signal and simulated device state."""
    inputs = scenario_inputs(samples, scenario_cfg)
    if device == "quadstretcher":
        params = quad_params_from_config(cfg)
        sim = QuadSimulator(params)
    else:
        params = squeezer_params_from_config(cfg)
        sim = SqueezerSimulator(params, PidGains.from_config(cfg))
        cal = SqueezeCalibration.from_config(cfg).check_travel(params)
    columns = ("time", "fx", "fy", "fz", "value") + sim.columns[1:]
    trace = Trace(columns)
    frames = []
    t0 = samples[0].t if samples else 0.0
    ticks_done = 0
    prev_t = None
    for k, (sample, inp) in enumerate(zip(samples, inputs)):
        if scenario_cfg.scenario.dof == 1:
            force, value = ZERO_FORCE, inp
        else:
            force, value = inp, inp.norm
        if device == "quadstretcher":
            if prev_t is not None:
                sim.advance(sample.t - prev_t)
            cmd = (render_1dof(value, scheme, params, sample.t) if scenario_cfg.scenario.dof == 1
                   else render_3dof(force, scheme, params, sample.t))
            frames.append(CommandFrame.from_stretch(cmd, k))
        else:
            ticks = int(round((sample.t - t0) * params.pid_rate))
            if ticks > ticks_done:
                sim.advance((ticks - ticks_done) / params.pid_rate)
                ticks_done = ticks
            cmd = (render_value(value, cal, sample.t) if scenario_cfg.scenario.dof == 1
                   else render_force(force, cal, sample.t))
            frames.append(CommandFrame.from_squeeze(cmd, k))
        sim.command(cmd)
        prev_t = sample.t
        trace.append((sample.t, force.x, force.y, force.z, value) + sim.row(sample.t)[1:])
    return trace, frames


def cmd_render(args) -> int:
    cfg = _load_cfg(args.config)
    if args.scenario:
        cfg = {**cfg, "scenario.id": args.scenario}
    scenario_cfg = ScenarioConfig.from_config(cfg)
    scheme = _pick_scheme(args.scheme, scenario_cfg.scenario)
    samples = load_trajectory(args.trajectory)
    trace, frames = render_trace(samples, scenario_cfg, args.device, scheme, cfg)
    if args.device == "quadstretcher":
        effective = {**quad_params_to_config(quad_params_from_config(cfg))}
    else:
        effective = {**squeezer_params_to_config(squeezer_params_from_config(cfg)),
                     **SqueezeCalibration.from_config(cfg).to_config()}
    effective.update(scenario_cfg.to_config())
    effective.update({"cli.device": args.device, "cli.scheme": scheme.value})
    trace.meta = _stamp(effective, args.seed)
    out = _output_path(args.out, "render.csv", args.force)
    trace.to_csv(out)
    if args.long:
        trace.to_long().to_csv(_output_path(args.out, "render_long.csv", args.force))
    _output_path(args.out, "frames.bin", args.force).write_bytes(
        b"".join(encode_frame(f) for f in frames))
    print(f"wrote {len(trace)} rows to {out}")
    return EXIT_OK


# --- jnd ----------------------------------------------------------------------------

def cmd_jnd(args) -> int:
    cfg = _load_cfg(args.config)
    side = Side.from_letter(args.side)
    kind = StretchType[args.type.upper()]
    reference = kind.sign * args.reference
    weber_k = args.weber
    if weber_k is None:
        weber_k = float(cfg.get("observer.weber_k", MEASURED_JND[side, kind][1]))
    if args.sigma is not None:
        observer = SimulatedObserver(args.sigma, weber_k, args.seed)
    elif "observer.noise_sigma" in cfg:
        observer = SimulatedObserver(float(cfg["observer.noise_sigma"]), weber_k, args.seed)
    else:
        observer = SimulatedObserver.for_weber(weber_k, reference, args.seed)
    if args.runs < 1:
        raise UsageError("--runs must be at least 1")
    comfort = quad_params_from_config(cfg).comfort_limit
    states = [run_staircase(reference, observer.reseeded(args.seed + i), max_trials=args.max_trials,
                            max_delta=comfort - abs(reference))
              for i in range(args.runs)]
    state = states[0]
    effective = {"observer.noise_sigma": observer.noise_sigma, "observer.weber_k": weber_k,
                 "jnd.side": side.letter, "jnd.type": kind.name.lower(),
                 "jnd.reference": reference, "jnd.max_trials": args.max_trials,
                 "jnd.runs": args.runs}
    stamp = _stamp(effective, args.seed)
    summary = {**staircase_summary(state), **stamp, "side": side.letter,
               "stretch_type": kind.name.lower(), "noise_sigma": observer.noise_sigma,
               "target_weber": weber_k}
    if math.isinf(summary["noise_sigma"]):
        summary["noise_sigma"] = "inf"
    if args.runs > 1:
        # run i uses seed + i; the top-level fields and trial log describe run 0
        summary["runs"] = [{"seed": args.seed + i, "status": st.status, "trials": len(st.history),
                            "jnd": st.jnd, "weber_fraction": st.weber_fraction}
                           for i, st in enumerate(states)]
        summary["mean_jnd"] = float(np.mean([st.jnd for st in states]))
        summary["mean_weber_fraction"] = float(np.mean([st.weber_fraction for st in states]))
    tag = f"{side.letter}{kind.letter}"
    _output_path(args.out, f"jnd_{tag}.json", args.force).write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    write_trial_log(_output_path(args.out, f"jnd_{tag}_trials.csv", args.force), state, stamp)
    print(f"{tag}: status={state.status} JND={state.jnd:.3f} mm "
          f"Weber={state.weber_fraction:.3f} trials={len(state.history)}")
    if args.runs > 1:
        print(f"{tag}: mean Weber over {args.runs} runs = {summary['mean_weber_fraction']:.3f}")
    failed = [st.status for st in states if not st.converged]
    if failed:
        print(f"{len(failed)} of {args.runs} staircase(s) did not converge ({failed[0]})",
              file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# --- confusion ------------------------------------------------------------------------

def cmd_confusion(args) -> int:
    cfg = _load_cfg(args.config)
    amplitude = args.amplitude
    if args.observer == "ideal":
        observer = ChannelObserver(0.0, args.seed)
    elif args.observer == "random":
        observer = ChannelObserver(0.0, args.seed, guess=True)
    elif args.sigma is not None or "observer.channel_sigma" in cfg:
        sigma = args.sigma if args.sigma is not None else float(cfg["observer.channel_sigma"])
        observer = ChannelObserver(sigma, args.seed)
    else:
        observer = calibrated_channel_observer(amplitude, args.seed)
    matrix = confusion_experiment(stimulus_set(args.session, amplitude), args.reps, observer,
                                  args.seed)
    effective = {"confusion.session": args.session, "confusion.reps": args.reps,
                 "confusion.observer": args.observer, "confusion.amplitude": amplitude,
                 "observer.channel_sigma": observer.noise_sigma}
    payload = {**matrix.to_dict(), **_stamp(effective, args.seed), "session": args.session,
               "reps": args.reps, "observer": args.observer,
               "row_sums": matrix.row_sums().tolist()}
    _output_path(args.out, f"confusion_session{args.session}.json", args.force).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"session {args.session}: accuracy={matrix.accuracy:.4f} "
          f"({np.trace(matrix.counts)}/{matrix.total})")
    return EXIT_OK


# --- protocol ---------------------------------------------------------------------------

def _frame_chunks(data: bytes):
    """Decoded frames with their raw bytes, plus errors, in stream order."""
    dec = FrameDecoder()
    return dec.feed(data) + dec.close()


def cmd_protocol_dump(args) -> int:
    data = Path(args.dump).read_bytes()
    errors = 0
    for ev in _frame_chunks(data):
        if isinstance(ev, CommandFrame):
            print(annotate_frame(encode_frame(ev)))
        else:
            errors += 1
            print(f"error at byte {ev.offset}: {type(ev).__name__}: {ev}")
    print(f"{errors} error(s)")
    return EXIT_OK if errors == 0 else EXIT_INPUT


def cmd_protocol_replay(args) -> int:
    frames, errors = decode_stream(Path(args.dump).read_bytes())
    cfg = _load_cfg(args.config)
    device_id = frames[0].device_id if frames else 1
    device = (QuadSimulator(quad_params_from_config(cfg)) if device_id == 1
              else SqueezerSimulator(squeezer_params_from_config(cfg), PidGains.from_config(cfg)))
    result = loopback_session(frames, device, frame_period=args.frame_period)
    result.trace.meta = _stamp({"replay.frame_period": args.frame_period, **cfg}, args.seed)
    out = _output_path(args.out, "replay.csv", args.force)
    result.trace.to_csv(out)
    print(f"replayed {len(result.applied)} frames, {len(errors)} error(s) in dump -> {out}")
    return EXIT_OK if not errors else EXIT_INPUT


def cmd_protocol_fuzz(args) -> int:
    stats = fuzz_decoder(args.count, args.seed)
    print(json.dumps({**stats, "tool": TOOL, "seed": args.seed}, sort_keys=True))
    return EXIT_OK if stats["crashes"] == 0 else EXIT_RUNTIME


# --- entry point ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quadstretch", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=TOOL)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out=True):
        sp.add_argument("--config", help="key-value config file")
        sp.add_argument("--seed", type=int, default=0)
        if out:
            sp.add_argument("--out", default=".", help="output directory")
            sp.add_argument("--force", action="store_true", help="overwrite existing outputs")

    r = sub.add_parser("render", help="replay a hand trajectory through a scenario and device")
    r.add_argument("trajectory")
    r.add_argument("--scenario", choices=[s.value for s in Scenario],
                   help="scenario id (overrides scenario.id in --config)")
    r.add_argument("--device", choices=["quadstretcher", "squeezer"], default="quadstretcher")
    r.add_argument("--scheme", choices=sorted(SCHEMES))
    r.add_argument("--long", action="store_true",
                   help="also write render_long.csv (time, series, value) for plotting")
    common(r)
    r.set_defaults(func=cmd_render)

    j = sub.add_parser("jnd", help="run one simulated 2-down-1-up 3-AFC staircase")
    j.add_argument("--side", choices=["D", "R", "V", "L"], default="D")
    j.add_argument("--type", choices=["contraction", "expansion"], default="expansion")
    j.add_argument("--reference", type=float, default=REFERENCE_LEVEL)
    j.add_argument("--weber", type=float, help="target Weber fraction (default: measured value)")
    j.add_argument("--sigma", type=float, help="observer noise in mm (0 ideal, inf random)")
    j.add_argument("--max-trials", type=int, default=1000)
    j.add_argument("--runs", type=int, default=1,
                   help="independent staircases (seeds seed..seed+runs-1); the summary adds means")
    common(j)
    j.set_defaults(func=cmd_jnd)

    c = sub.add_parser("confusion", help="simulate one stimulus discrimination session")
    c.add_argument("--session", type=int, choices=[1, 2, 3, 4], required=True)
    c.add_argument("--reps", type=int, default=10)
    c.add_argument("--observer", choices=["calibrated", "ideal", "random"], default="calibrated")
    c.add_argument("--sigma", type=float, help="channel noise in mm for the calibrated observer")
    c.add_argument("--amplitude", type=float, default=8.6)
    common(c)
    c.set_defaults(func=cmd_confusion)

    pr = sub.add_parser("protocol", help="inspect, replay or fuzz the byte protocol")
    psub = pr.add_subparsers(dest="action", required=True, parser_class=_Parser)
    d = psub.add_parser("dump", help="annotated hex of a raw frame dump")
    d.add_argument("dump")
    d.set_defaults(func=cmd_protocol_dump)
    rp = psub.add_parser("replay", help="feed a raw frame dump through the loopback simulator")
    rp.add_argument("dump")
    rp.add_argument("--frame-period", type=float, default=0.02)
    common(rp)
    rp.set_defaults(func=cmd_protocol_replay)
    f = psub.add_parser("fuzz", help="decoder robustness on random buffers")
    f.add_argument("--count", type=int, default=100_000)
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_protocol_fuzz)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"quadstretch: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, FileNotFoundError, IsADirectoryError, KeyError) as exc:
        print(f"quadstretch: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ContractViolation, HapticError) as exc:
        print(f"quadstretch: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
