# 定义项目里用到的字符串常量


class Variant:
    """测量方案的类型标签，也是 JSON 里 "variant" 字段的取值"""

    mub_set = "MubSet"
    sic_povm = "SicPovm"
    mum_set = "MumSet"
    general_sic = "GeneralSic"

    # CLI 里的短名 -> 标签
    aliases = {
        "mub": mub_set,
        "sic": sic_povm,
        "mum": mum_set,
        "gsic": general_sic,
    }

    all = (mub_set, sic_povm, mum_set, general_sic)


class StateKind:
    pure = "pure"
    mixed = "mixed"


class ChannelKind:
    bistochastic = "bistochastic"
    generic = "generic"
    depolarizing = "depolarizing"
    contraction = "contraction"
    unitary = "unitary"

    all = (bistochastic, generic, depolarizing, contraction, unitary)


class ErrorKind:
    dimension_mismatch = "dimension_mismatch"
    invariant_violation = "invariant_violation"
    unsupported = "unsupported"
    range = "range"
    numerical = "numerical"
    parse = "parse"
    io = "io"
    inconsistent = "inconsistent"
    usage = "usage"


class ExitCode:
    ok = 0
    check_failure = 1
    usage = 2
    io_or_parse = 3


# 约定用 "max" 表示“取正定性允许的最大 t”
T_MAX_SENTINEL = "max"

BZINFO_VERSION = "1.0.0"
