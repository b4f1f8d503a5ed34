import functools
import logging

from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple

import click
from tqdm import tqdm

# Internal imports
from src.data_manager import (
    DataManager,
    load_family_doc,
    load_kernel,
    load_sample_doc,
    write_kernel,
    write_potential,
)
from src.delta_additive import (
    LPObjective,
    LPStatus,
    build_ch,
    check_add,
    compose_p3,
    compose_p3_as_printed,
    decompose_p2,
    represent_ch,
    synthesize_min_g,
)
from src.delta_multiplicative import check_main, gamma, theorem_probe, zero_propagation_check
from src.generators import OUTPUT_NAMES, GeneratorKind, GeneratorSpec, certify, generate
from src.gruss import FunctionSample, gruss_check, richard_scan
from src.kernel_core import DEFAULT_TOLERANCE, DefectKind, defect_scan
from src.sincov import constant_f_from_c, gronau_factorize, pams_scan
from src.subadditive import (
    PotentialFamily,
    canonical_potentials,
    membership_defect,
    sup_representation,
    triangle_closure,
    verify_corollary_ct,
)
from utils.exceptions import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, EXIT_VIOLATED, ToolkitError
from utils.logger import set_log_level, setup_logger

logger = setup_logger(__name__)

Verdict = Tuple[Dict, int]


def _verdict(command: str, report, ok: bool) -> Verdict:
    return {"command": command, "ok": ok, "report": report}, EXIT_OK if ok else EXIT_VIOLATED


def toolkit_command(func: Callable[..., Verdict]) -> Callable[..., int]:
    """
    Adds the shared flags to a subcommand and turns its (report, exit code)
    result, or a ToolkitError, into an emitted JSON report and an exit code.
    """
    @click.option("--tolerance", type=float, default=DEFAULT_TOLERANCE, show_default=True,
                  help="Absolute tolerance for every check.")
    @click.option("--out", type=click.Path(dir_okay=False), default=None,
                  help="Write the JSON report here instead of stdout.")
    @click.option("--no-timestamp", is_flag=True, help="Omit generated_at for byte-identical reruns.")
    @click.option("--jobs", type=int, default=1, show_default=True, help="joblib workers for scans.")
    @click.option("--verbose", "verbosity", flag_value="verbose", help="Log at DEBUG level.")
    @click.option("--quiet", "verbosity", flag_value="quiet", help="Log warnings and errors only.")
    @functools.wraps(func)
    def wrapper(tolerance, out, no_timestamp, jobs, verbosity, **kwargs) -> int:
        if verbosity == "verbose":
            set_log_level(logging.DEBUG)
        elif verbosity == "quiet":
            set_log_level(logging.WARNING)
        manager = DataManager(out=out, timestamp=not no_timestamp)
        try:
            report, code = func(tolerance=tolerance, jobs=jobs, **kwargs)
        except ToolkitError as e:
            logger.error(f"{type(e).__name__}: {e}")
            manager.emit_error(e)
            return e.exit_code
        manager.emit(report)
        return code

    return wrapper


@click.group()
def cli():
    """Finite-domain checks for Sincov-type functional inequalities."""
    pass


@cli.command("defect")
@click.option("--kind", type=click.Choice([k.value for k in DefectKind]), required=True)
@click.option("--input", "input_path", type=click.Path(), required=True, help="Kernel (T, H, S, or the first of a pair).")
@click.option("--second", type=click.Path(), default=None, help="F or G for the main and add kinds.")
@click.option("--imag", type=click.Path(), default=None, help="Imaginary part of the first kernel.")
@toolkit_command
def defect_command(kind, input_path, second, imag, tolerance, jobs) -> Verdict:
    kernels = [load_kernel(input_path)]
    if second is not None:
        kernels.append(load_kernel(second))
    imaginary = load_kernel(imag) if imag else None
    report = defect_scan(kind, *kernels, tolerance=tolerance, imaginary=imaginary, n_jobs=jobs)
    return _verdict("defect", report, report.holds)


@cli.command("closure")
@click.option("--input", "input_path", type=click.Path(), required=True)
@click.option("--write", type=click.Path(dir_okay=False), default=None, help="Also write the closure as a kernel file.")
@toolkit_command
def closure_command(input_path, write, tolerance, jobs) -> Verdict:
    closure = triangle_closure(load_kernel(input_path))
    if write:
        write_kernel(closure, write)
    return _verdict("closure", {"closure": closure}, True)


@cli.command("represent")
@click.option("--input", "input_path", type=click.Path(), default=None, help="Kernel H; its canonical potentials are used.")
@click.option("--family", type=click.Path(), default=None, help="Potential family file.")
@click.option("--write", type=click.Path(dir_okay=False), default=None)
@toolkit_command
def represent_command(input_path, family, write, tolerance, jobs) -> Verdict:
    if (input_path is None) == (family is None):
        raise click.UsageError("give exactly one of --input and --family")
    report = {}
    if family is not None:
        potentials = PotentialFamily(*load_family_doc(family))
    else:
        H = load_kernel(input_path)
        potentials = canonical_potentials(H)
    represented = sup_representation(potentials)
    report["family"] = potentials
    report["representation"] = represented
    ok = True
    if input_path is not None:
        report["membership_defect"] = membership_defect(potentials, H)
        report["representation_error"] = represented.max_abs_difference(H)
        ok = report["representation_error"] <= tolerance
    if write:
        write_kernel(represented, write)
    return _verdict("represent", report, ok)


@cli.command("verify-ct")
@click.option("--input", "input_path", type=click.Path(), required=True)
@toolkit_command
def verify_ct_command(input_path, tolerance, jobs) -> Verdict:
    report = verify_corollary_ct(load_kernel(input_path), tolerance)
    return _verdict("verify-ct", report, report.holds)


@cli.command("check-add")
@click.option("--s", "s_path", type=click.Path(), required=True)
@click.option("--g", "g_path", type=click.Path(), required=True)
@toolkit_command
def check_add_command(s_path, g_path, tolerance, jobs) -> Verdict:
    report = check_add(load_kernel(s_path), load_kernel(g_path), tolerance)
    return _verdict("check-add", report, report.holds)


@cli.command("decompose")
@click.option("--s", "s_path", type=click.Path(), required=True)
@click.option("--g", "g_path", type=click.Path(), required=True)
@click.option("--write-dir", type=click.Path(file_okay=False), default=None, help="Write H1.json and H2.json here.")
@toolkit_command
def decompose_command(s_path, g_path, write_dir, tolerance, jobs) -> Verdict:
    result = decompose_p2(load_kernel(s_path), load_kernel(g_path), tolerance)
    if write_dir:
        write_kernel(result.h1, Path(write_dir) / "H1.json")
        write_kernel(result.h2, Path(write_dir) / "H2.json")
    return _verdict("decompose", result, result.holds)


@cli.command("compose")
@click.option("--h1", "h1_path", type=click.Path(), required=True)
@click.option("--h2", "h2_path", type=click.Path(), required=True)
@click.option("--as-printed", is_flag=True, help="Use S = H1 + H2, G = H1 - H2 instead.")
@click.option("--write-dir", type=click.Path(file_okay=False), default=None, help="Write S.json and G.json here.")
@toolkit_command
def compose_command(h1_path, h2_path, as_printed, write_dir, tolerance, jobs) -> Verdict:
    compose = compose_p3_as_printed if as_printed else compose_p3
    result = compose(load_kernel(h1_path), load_kernel(h2_path), tolerance)
    if write_dir:
        write_kernel(result.s, Path(write_dir) / "S.json")
        write_kernel(result.g, Path(write_dir) / "G.json")
    return _verdict("compose", result, result.holds)


@cli.command("synth-g")
@click.option("--s", "s_path", type=click.Path(), required=True)
@click.option("--objective", type=click.Choice([o.value for o in LPObjective]), default="sum", show_default=True)
@click.option("--symmetric", is_flag=True)
@click.option("--zero-diagonal", is_flag=True)
@click.option("--write", type=click.Path(dir_okay=False), default=None, help="Write the optimal G here.")
@toolkit_command
def synth_g_command(s_path, objective, symmetric, zero_diagonal, write, tolerance, jobs) -> Verdict:
    outcome = synthesize_min_g(load_kernel(s_path), objective, symmetric, zero_diagonal)
    if write and outcome.g is not None:
        write_kernel(outcome.g, write)
    report, _ = _verdict("synth-g", outcome, outcome.holds)
    codes = {LPStatus.OPTIMAL: EXIT_OK, LPStatus.INFEASIBLE_GUARD: EXIT_INFEASIBLE}
    return report, codes.get(outcome.status, EXIT_VIOLATED)


@cli.command("build-ch")
@click.option("--family1", type=click.Path(), required=True)
@click.option("--family2", type=click.Path(), required=True)
@toolkit_command
def build_ch_command(family1, family2, tolerance, jobs) -> Verdict:
    result = build_ch(PotentialFamily(*load_family_doc(family1)), PotentialFamily(*load_family_doc(family2)), tolerance)
    return _verdict("build-ch", result, result.holds)


@cli.command("represent-ch")
@click.option("--s", "s_path", type=click.Path(), required=True)
@click.option("--g", "g_path", type=click.Path(), required=True)
@toolkit_command
def represent_ch_command(s_path, g_path, tolerance, jobs) -> Verdict:
    result = represent_ch(load_kernel(s_path), load_kernel(g_path), tolerance)
    return _verdict("represent-ch", result, result.holds)


@cli.command("check-main")
@click.option("--t", "t_path", type=click.Path(), required=True)
@click.option("--f", "f_path", type=click.Path(), required=True)
@click.option("--t-imag", type=click.Path(), default=None, help="Imaginary part of a complex T.")
@toolkit_command
def check_main_command(t_path, f_path, t_imag, tolerance, jobs) -> Verdict:
    imaginary = load_kernel(t_imag) if t_imag else None
    report = check_main(load_kernel(t_path), load_kernel(f_path), tolerance, imaginary)
    return _verdict("check-main", report, report.holds)


@cli.command("probe")
@click.option("--t", "t_path", type=click.Path(), required=True)
@click.option("--f", "f_path", type=click.Path(), required=True)
@click.option("--t-imag", type=click.Path(), default=None)
@toolkit_command
def probe_command(t_path, f_path, t_imag, tolerance, jobs) -> Verdict:
    imaginary = load_kernel(t_imag) if t_imag else None
    report = theorem_probe(load_kernel(t_path), load_kernel(f_path), tolerance, imaginary)
    return _verdict("probe", report, report.holds)


@cli.command("gamma")
@click.option("--f", "f_path", type=click.Path(), required=True)
@click.option("--write", type=click.Path(dir_okay=False), default=None)
@toolkit_command
def gamma_command(f_path, write, tolerance, jobs) -> Verdict:
    result = gamma(load_kernel(f_path))
    if write:
        write_kernel(result, write)
    return _verdict("gamma", {"gamma": result}, True)


@cli.command("zero-prop")
@click.option("--f", "f_path", type=click.Path(), required=True)
@toolkit_command
def zero_prop_command(f_path, tolerance, jobs) -> Verdict:
    report = zero_propagation_check(load_kernel(f_path), tolerance)
    return _verdict("zero-prop", report, report.holds)


@cli.command("gruss")
@click.option("--f", "f_path", type=click.Path(), required=True, help="Function sample file for f.")
@click.option("--g", "g_path", type=click.Path(), required=True, help="Function sample file for g.")
@toolkit_command
def gruss_command(f_path, g_path, tolerance, jobs) -> Verdict:
    f = FunctionSample(**load_sample_doc(f_path))
    g = FunctionSample(**load_sample_doc(g_path))
    report = gruss_check(f, g, tolerance)
    return _verdict("gruss", report, report.holds)


@cli.command("richard")
@click.option("--dim", type=int, required=True)
@click.option("--trials", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--progress", is_flag=True, help="Show a progress bar on stderr.")
@toolkit_command
def richard_command(dim, trials, seed, progress, tolerance, jobs) -> Verdict:
    report = richard_scan(dim, trials, seed, tolerance=tolerance, n_jobs=jobs, progress=progress)
    return _verdict("richard", report, report.holds)


@cli.command("gen")
@click.option("--kind", type=click.Choice([k.value for k in GeneratorKind]), required=True)
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--scale", type=float, default=1.0, show_default=True)
@click.option("--count", type=int, default=1, show_default=True, help="Instances with seeds seed, seed+1, ...")
@click.option("--dir", "out_dir", type=click.Path(file_okay=False), default=None, help="Write generated kernels here.")
@click.option("--progress", is_flag=True)
@toolkit_command
def gen_command(kind, n, seed, scale, count, out_dir, progress, tolerance, jobs) -> Verdict:
    instances: List[Dict] = []
    ok = True
    for offset in tqdm(range(count), desc="gen", disable=not progress):
        spec = GeneratorSpec(kind, n, seed + offset, scale)
        kernels = generate(spec)
        check = certify(spec.kind, kernels, tolerance)
        ok = ok and check.holds
        entry = {"spec": spec, "check": check}
        names = OUTPUT_NAMES[spec.kind]
        if out_dir:
            files = []
            for name, kernel in zip(names, kernels):
                stem = name if count == 1 else f"{name}_{spec.seed}"
                path = Path(out_dir) / f"{stem}.json"
                write_kernel(kernel, path)
                files.append(str(path))
            entry["files"] = files
        else:
            entry["kernels"] = dict(zip(names, kernels))
        instances.append(entry)
    return _verdict("gen", {"instances": instances}, ok)


@cli.command("factorize")
@click.option("--input", "input_path", type=click.Path(), required=True)
@click.option("--base", default=None, help="Base label; defaults to the first label.")
@click.option("--write", type=click.Path(dir_okay=False), default=None, help="Write Phi as a potential file.")
@toolkit_command
def factorize_command(input_path, base, write, tolerance, jobs) -> Verdict:
    result = gronau_factorize(load_kernel(input_path), base, tolerance)
    if write:
        write_potential(result.potential, write)
    return _verdict("factorize", result, True)


@cli.command("pams")
@click.option("--input", "input_path", type=click.Path(), required=True)
@click.option("--imag", type=click.Path(), default=None)
@toolkit_command
def pams_command(input_path, imag, tolerance, jobs) -> Verdict:
    imaginary = load_kernel(imag) if imag else None
    scan = pams_scan(load_kernel(input_path), imaginary)
    report = {
        "c": scan.max_defect,
        "argmax": list(scan.argmax),
        "constant_f": constant_f_from_c(max(scan.max_defect, 0.0)),
    }
    return _verdict("pams", report, True)


def run(argv: Sequence[str] | None = None) -> int:
    """Run the CLI on `argv` and return the exit code instead of exiting."""
    try:
        code = cli.main(args=list(argv) if argv is not None else None, prog_name="fi-toolkit", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    return code if isinstance(code, int) else EXIT_OK


if __name__ == "__main__":
    raise SystemExit(run())
