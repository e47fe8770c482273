# bzinfo/src/cli.py
"""
命令行入口。每个子命令一个 handler，结果统一是一个 JSON 文档 + 退出码：
0 正常 / 1 检查未通过 / 2 用法错误 / 3 读写或解析错误。
"""
import argparse
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

from .bz_information import (
    bz_information,
    bz_information_eta,
    coincidence_closed_form,
    coincidence_sum,
    index_of_coincidence,
    probabilities,
    scheme_total,
    scheme_total_eta,
    uniform_reference_sweep,
    distort,
)
from .channels import (
    apply,
    is_bistochastic,
    is_trace_preserving,
    is_unital,
    load_channel,
    monotonicity_check,
    non_unitality,
    sample_channel,
    save_channel,
)
from .config import get_config
from .definitions import BZINFO_VERSION, T_MAX_SENTINEL, ChannelKind, ErrorKind, ExitCode, StateKind, Variant
from .errors import BzinfoError, ParameterRangeError, UsageError
from .logger import configure_logging, logger
from .measurement_sets import (
    MeasurementScheme,
    build_general_sic,
    build_mub_set,
    build_mum_set,
    build_sic_povm,
    load_scheme,
    require_valid,
    save_scheme,
    validate_scheme,
)
from .operator_core import load_state, purity, sample_random_state, save_state, state_to_json
from .probe_protocol import BlackBox, load_shots, probe_channel, report_from_shots, save_shots
from .sic_search import optimize_sic_fiducial
from .utils import derive_rng, dumps_json

SCHEMA_HELP = """JSON 格式:
  Matrix JSON     {"d": D, "entries": [[re, im], ...]}  (d² 个条目，按行)
  Scheme JSON     {"variant": ..., "d": ..., "kappa"?: ..., "a"?: ..., "povms": [[Matrix JSON, ...], ...]}
  Channel JSON    {"d": ..., "kraus": [Matrix JSON, ...]}
  ShotRecord JSON {"scheme": Scheme JSON 或文件路径, "N": ..., "seed": ..., "eta"?: ..., "counts": [[...], ...]}
退出码: 0 正常, 1 检查未通过, 2 用法错误, 3 读写或解析错误"""

ETA_GRID = tuple(round(0.1 * k, 1) for k in range(11))


@dataclass
class CommandResult:
    exit_code: int
    document: Optional[Dict[str, Any]]


class _Parser(argparse.ArgumentParser):
    """用法错误改成抛 UsageError，由 run 统一输出 JSON"""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


# --- 参数解析小工具 ---


def _seed(raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"种子需要非负整数，收到 '{raw}'") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"种子需要非负整数，收到 {value}")
    return value


def _parse_t(raw: Optional[str]):
    if raw is None or raw == T_MAX_SENTINEL:
        return T_MAX_SENTINEL
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"--t 需要实数或 '{T_MAX_SENTINEL}'，收到 '{raw}'") from None


def _build_scheme(variant: str, d: int, t: Any = T_MAX_SENTINEL, seed: int = 0) -> MeasurementScheme:
    if variant == Variant.mub_set:
        return build_mub_set(d)
    if variant == Variant.sic_povm:
        if d in (2, 3):
            return build_sic_povm(d)
        search = optimize_sic_fiducial(d, seed=seed)
        if not search.success:
            raise BzinfoError(
                f"d={d} 的 SIC fiducial 搜索未收敛 (帧势 {search.potential:.12g}，目标 {search.target:.12g}，"
                f"重叠偏差 {search.overlap_deviation:.3e})"
            )
        return build_sic_povm(d, fiducial=search.fiducial)
    if variant == Variant.mum_set:
        return build_mum_set(d, t)
    return build_general_sic(d, t)


def _scheme_parameters(scheme: MeasurementScheme) -> Dict[str, Any]:
    params: Dict[str, Any] = {"variant": scheme.variant, "d": scheme.d}
    if scheme.kappa is not None:
        params["kappa"] = scheme.kappa
    if scheme.a_param is not None:
        params["a"] = scheme.a_param
        params["b"] = scheme.b_param
    if scheme.t is not None:
        params["t"] = scheme.t
    return params


# --- 子命令 ---


class BaseCommandHandler(ABC):
    name: str = ""
    help: str = ""

    @abstractmethod
    def configure(self, parser: argparse.ArgumentParser) -> None:
        pass

    @abstractmethod
    def execute(self, args: argparse.Namespace) -> CommandResult:
        pass


class GenHandler(BaseCommandHandler):
    name = "gen"
    help = "构造测量方案并写出 Scheme JSON"

    def configure(self, parser):
        parser.add_argument("variant", choices=sorted(Variant.aliases))
        parser.add_argument("-d", type=int, required=True)
        parser.add_argument("--t", default=None, help="正实数或 'max' (mum/gsic)")
        parser.add_argument("--seed", type=_seed, default=0)
        parser.add_argument("-o", "--output", required=True)

    def execute(self, args):
        variant = Variant.aliases[args.variant]
        scheme = _build_scheme(variant, args.d, _parse_t(args.t), args.seed)
        report = validate_scheme(scheme)
        save_scheme(scheme, args.output)
        document = _scheme_parameters(scheme)
        document.update({"output": args.output, "valid": report.passed})
        return CommandResult(ExitCode.ok if report.passed else ExitCode.check_failure, document)


class ValidateHandler(BaseCommandHandler):
    name = "validate"
    help = "校验 Scheme JSON 的结构条件"

    def configure(self, parser):
        parser.add_argument("file")

    def execute(self, args):
        report = validate_scheme(load_scheme(args.file))
        return CommandResult(ExitCode.ok if report.passed else ExitCode.check_failure, report.to_dict())


class InfoHandler(BaseCommandHandler):
    name = "info"
    help = "计算方案在给定态上的重合指数与 BZ 信息量"

    def configure(self, parser):
        parser.add_argument("--scheme", required=True)
        parser.add_argument("--state", required=True)
        parser.add_argument("--eta", type=float, default=None)
        parser.add_argument("--sweep-eta", action="store_true", help="对比均匀参照与 ρ* 参照随 η 的变化")

    def execute(self, args):
        scheme = require_valid(load_scheme(args.scheme))
        rho = load_state(args.state)
        eta = args.eta

        per_povm = []
        for povm in scheme.povms:
            dist = probabilities(povm, rho)
            if eta is None:
                per_povm.append(
                    {
                        "label": povm.label,
                        "coincidence": index_of_coincidence(dist),
                        "bz_information": bz_information(povm, rho),
                    }
                )
            else:
                per_povm.append(
                    {
                        "label": povm.label,
                        "coincidence": index_of_coincidence(distort(dist, eta)),
                        "bz_information": bz_information_eta(povm, rho, eta),
                    }
                )

        total = scheme_total(scheme, rho) if eta is None else scheme_total_eta(scheme, rho, eta)
        state_purity = purity(rho)
        document: Dict[str, Any] = {
            "scheme": _scheme_parameters(scheme),
            "eta": eta,
            "per_povm": per_povm,
            "coincidence_sum": float(sum(row["coincidence"] for row in per_povm)),
            "bz_total_measured": total.measured,
            "bz_total_predicted": total.predicted,
            "purity": state_purity,
        }
        if eta is None:
            document["coincidence_closed_form"] = coincidence_closed_form(scheme, state_purity)
        if args.sweep_eta:
            document["eta_sweep"] = uniform_reference_sweep(scheme, rho, ETA_GRID)
        return CommandResult(ExitCode.ok, document)


class IdentityCheckHandler(BaseCommandHandler):
    name = "identity-check"
    help = "在随机态上核对重合指数之和的闭式以及 η² 律"

    def configure(self, parser):
        parser.add_argument("--variant", required=True, choices=sorted(Variant.aliases))
        parser.add_argument("-d", type=int, required=True)
        parser.add_argument("--trials", type=int, default=100)
        parser.add_argument("--seed", type=_seed, default=0)
        parser.add_argument("--t", default=None)
        parser.add_argument("--eta", type=float, default=None, help="同时核对 total_η = η²·total")

    def execute(self, args):
        if args.trials < 1:
            raise ParameterRangeError(f"--trials 必须 ≥ 1，收到 {args.trials}")
        scheme = _build_scheme(Variant.aliases[args.variant], args.d, _parse_t(args.t), args.seed)
        tol = get_config().validation_tol

        coincidence_dev = total_dev = eta_dev = 0.0
        for trial in range(args.trials):
            kind = StateKind.pure if trial % 2 == 0 else StateKind.mixed
            rho = sample_random_state(args.d, kind, derive_rng(args.seed, trial))
            closed = coincidence_closed_form(scheme, purity(rho))
            coincidence_dev = max(coincidence_dev, abs(coincidence_sum(scheme, rho) - closed))
            total = scheme_total(scheme, rho)
            total_dev = max(total_dev, total.deviation)
            if args.eta is not None:
                eta_dev = max(eta_dev, scheme_total_eta(scheme, rho, args.eta).deviation)
            logger.debug(f"identity-check 第 {trial} 次 ({kind}): 偏差 {coincidence_dev:.3e}")

        worst = max(coincidence_dev, total_dev, eta_dev)
        passed = worst <= tol
        document = {
            "scheme": _scheme_parameters(scheme),
            "trials": args.trials,
            "seed": args.seed,
            "eta": args.eta,
            "max_coincidence_deviation": coincidence_dev,
            "max_total_deviation": total_dev,
            "max_deviation": worst,
            "tolerance": tol,
            "passed": passed,
        }
        if args.eta is not None:
            document["max_eta_deviation"] = eta_dev
        return CommandResult(ExitCode.ok if passed else ExitCode.check_failure, document)


class ChannelHandler(BaseCommandHandler):
    name = "channel"
    help = "信道作用、性质检查与范数界"

    def configure(self, parser):
        parser.add_argument("action", choices=["apply", "check", "norms"])
        parser.add_argument("--channel", required=True)
        parser.add_argument("--state", default=None)
        parser.add_argument("-o", "--output", default=None, help="apply 时写出输出态")

    def execute(self, args):
        phi = load_channel(args.channel)
        if args.action == "apply":
            if args.state is None:
                raise UsageError("channel apply 需要 --state")
            output = apply(phi, load_state(args.state))
            if args.output:
                save_state(output, args.output)
            return CommandResult(ExitCode.ok, {"state": state_to_json(output), "purity": purity(output)})

        if args.action == "check":
            bistochastic = is_bistochastic(phi)
            document: Dict[str, Any] = {
                "d": phi.dim,
                "kraus_count": len(phi.kraus),
                "trace_preserving": is_trace_preserving(phi),
                "trace_preservation_deviation": phi.trace_preservation_deviation(),
                "unital": is_unital(phi),
                "unitality_deviation": phi.unitality_deviation(),
                "bistochastic": bistochastic,
            }
            exit_code = ExitCode.ok
            if args.state is not None:
                if not bistochastic:
                    raise UsageError("单调性检查只接受双随机信道，非保单位信道请用 channel norms")
                report = monotonicity_check(phi, load_state(args.state))
                document["monotonicity"] = report.to_dict()
                if not report.holds:
                    exit_code = ExitCode.check_failure
            return CommandResult(exit_code, document)

        report = non_unitality(phi)
        document = report.to_dict()
        document["d"] = phi.dim
        return CommandResult(ExitCode.ok if report.holds else ExitCode.check_failure, document)


class RandHandler(BaseCommandHandler):
    name = "rand"
    help = "生成随机信道或随机态"

    def configure(self, parser):
        parser.add_argument("what", choices=["channel", "state"])
        parser.add_argument("-d", type=int, required=True)
        parser.add_argument("--kind", required=True)
        parser.add_argument("--seed", type=_seed, default=0)
        parser.add_argument("-o", "--output", required=True)
        parser.add_argument("--lam", type=float, default=None, help="depolarizing 的 λ")
        parser.add_argument("--i0", type=int, default=0, help="contraction 的目标基矢")
        parser.add_argument("--terms", type=int, default=3, help="bistochastic 的酉分量个数")
        parser.add_argument("--env-dim", type=int, default=None, help="generic 的环境维数")

    def execute(self, args):
        rng = derive_rng(args.seed)
        if args.what == "state":
            if args.kind not in (StateKind.pure, StateKind.mixed):
                raise UsageError(f"态类型只能是 pure|mixed，收到 '{args.kind}'")
            rho = sample_random_state(args.d, args.kind, rng)
            save_state(rho, args.output)
            return CommandResult(
                ExitCode.ok, {"d": args.d, "kind": args.kind, "purity": purity(rho), "output": args.output}
            )

        if args.kind not in ChannelKind.all:
            raise UsageError(f"信道类型只能是 {'|'.join(ChannelKind.all)}，收到 '{args.kind}'")
        phi = sample_channel(
            args.d, args.kind, rng, terms=args.terms, env_dim=args.env_dim, lam=args.lam, i0=args.i0
        )
        save_channel(phi, args.output)
        return CommandResult(
            ExitCode.ok,
            {
                "d": args.d,
                "kind": args.kind,
                "kraus_count": len(phi.kraus),
                "bistochastic": is_bistochastic(phi),
                "output": args.output,
            },
        )


class ProbeHandler(BaseCommandHandler):
    name = "probe"
    help = "把 ρ* 送进黑盒信道，用有限次测量估计 ‖Γ‖₂ 与映射范数上界"

    def configure(self, parser):
        parser.add_argument("mode", nargs="?", choices=["report"], help="report: 从计数记录重算报告")
        parser.add_argument("--channel", default=None)
        parser.add_argument("--scheme", default=None)
        parser.add_argument("--shots", required=True, help="每个 POVM 的测量次数；report 模式下为计数记录文件")
        parser.add_argument("--seed", type=_seed, default=0)
        parser.add_argument("--eta", type=float, default=None)
        parser.add_argument("--bootstrap", type=int, default=None, help="bootstrap 重抽样次数")
        parser.add_argument("--save-shots", default=None)

    def execute(self, args):
        if args.mode == "report":
            report = report_from_shots(load_shots(args.shots), args.bootstrap)
        else:
            if args.channel is None or args.scheme is None:
                raise UsageError("probe 需要 --channel 和 --scheme")
            try:
                shots = int(args.shots)
            except ValueError:
                raise UsageError(f"--shots 需要正整数，收到 '{args.shots}'") from None
            blackbox = BlackBox.from_channel(load_channel(args.channel))
            report = probe_channel(
                blackbox, load_scheme(args.scheme), shots, args.seed, args.eta, args.bootstrap
            )
            if args.save_shots:
                save_shots(report.record, args.save_shots)
        return CommandResult(ExitCode.ok if report.consistent else ExitCode.check_failure, report.to_dict())


COMMAND_HANDLERS: Dict[str, BaseCommandHandler] = {
    handler.name: handler
    for handler in (
        GenHandler(),
        ValidateHandler(),
        InfoHandler(),
        IdentityCheckHandler(),
        ChannelHandler(),
        RandHandler(),
        ProbeHandler(),
    )
}


def get_command_handler(name: str) -> Optional[BaseCommandHandler]:
    return COMMAND_HANDLERS.get(name)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="bzinfo",
        description="Brukner–Zeilinger 信息量、测量方案与信道非保单位性的数值工具",
        epilog=SCHEMA_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="store_true", help="输出版本号")
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "OFF"],
        help="控制台 (stderr) 日志级别",
    )
    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)
    for handler in COMMAND_HANDLERS.values():
        sub = subparsers.add_parser(
            handler.name,
            help=handler.help,
            description=handler.help,
            epilog=SCHEMA_HELP,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        handler.configure(sub)
    return parser


def _error_document(kind: str, message: str, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    error = {"kind": kind, "message": message}
    if extra:
        error.update(extra)
    return {"error": error}


def run(argv: Optional[Sequence[str]] = None) -> CommandResult:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.log_level:
            configure_logging(console_level=args.log_level)
        if args.version:
            return CommandResult(ExitCode.ok, {"version": BZINFO_VERSION})
        handler = get_command_handler(args.command) if args.command else None
        if handler is None:
            raise UsageError("缺少子命令，可选: " + ", ".join(COMMAND_HANDLERS))
        logger.debug(f"执行子命令 {args.command}: {argv}")
        return handler.execute(args)
    except SystemExit as e:
        # --help 已经打印了帮助文本
        code = e.code if isinstance(e.code, int) else ExitCode.usage
        return CommandResult(code, None)
    except BzinfoError as e:
        logger.warning(f"命令失败 [{e.kind}]: {e}")
        return CommandResult(e.exit_code, {"error": e.to_dict()})
    except OSError as e:
        logger.error(f"文件读写失败: {e}")
        return CommandResult(ExitCode.io_or_parse, _error_document(ErrorKind.io, str(e)))


def main(argv: Optional[Sequence[str]] = None) -> int:
    result = run(argv)
    if result.document is not None:
        sys.stdout.write(dumps_json(result.document, indent=get_config().json_indent) + "\n")
    return result.exit_code
