from configparser import ConfigParser, Error as ConfigParserError
from dataclasses import dataclass, field, fields, replace
from io import StringIO
from os import environ
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union
import logging
import logging.config
import sys

from lib.decoding.filters import DeltaMargin, FilterSpec, Joint, TopK
from lib.decoding.strategy import (
    CD,
    DecodeConfig,
    Greedy,
    MacdConsensus,
    MacdMean,
    Nucleus,
    StrategySpec,
    TopKSample,
    Typical
)
from lib.ensemble import LogProbThreshold, MODES, SEQUENTIAL, TopRank, VoteRule
from lib.errors import ConfigError, MiniMacdException
from lib.lm.ngram import ADDITIVE, KNESER_NEY, Smoothing

logger = logging.getLogger(__name__)

CONFIG_ENV = "MINIMACD_CONFIG"
LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"

STRATEGIES = ("greedy", "topk", "nucleus", "typical", "cd", "macd-mean", "macd-consensus")
FILTERS = ("topk", "delta", "joint")
VOTE_RULES = ("top-rank", "threshold")
DOMAINS = ("news", "wiki", "story")
AMATEUR_PREFIX = "amateur."


@dataclass(frozen=True)
class DataSettings:
    train: str
    prompts: Optional[str] = None
    news: Optional[str] = None
    wiki: Optional[str] = None
    story: Optional[str] = None
    min_count: int = 1
    prompt_len: int = 32
    max_new_tokens: int = 256
    out: str = "out"


@dataclass(frozen=True)
class ModelSpec:
    order: int
    smoothing: str = KNESER_NEY
    param: float = 0.75

    @property
    def smoothing_spec(self) -> Smoothing:
        return Smoothing(self.smoothing, self.param)


@dataclass(frozen=True)
class AmateurSpec:
    label: str
    order: int
    smoothing: str = ADDITIVE
    param: float = 0.01
    temperature: float = 0.5
    bias: Optional[str] = None

    @property
    def smoothing_spec(self) -> Smoothing:
        return Smoothing(self.smoothing, self.param)


@dataclass(frozen=True)
class DecodeSettings:
    strategies: Tuple[str, ...] = STRATEGIES
    alpha: float = 0.1
    alpha_consensus: Optional[float] = None
    k: int = 50
    p: float = 0.95
    tau_t: float = 0.95
    filter: str = "topk"
    delta: float = 2.0
    cr_cap: float = 1.0
    vote_rule: str = "top-rank"
    r: int = 10
    tau_c: Optional[float] = None
    beam_width: int = 1
    logp_floor: float = -30.0
    seed: int = 0
    ensemble_mode: str = SEQUENTIAL
    workers: int = 1
    repetitions: int = 5
    bench_prompts: int = 100


@dataclass(frozen=True)
class ExperimentConfig:
    """
    実験設定

    相対パスは設定ファイルのあるディレクトリから解決されます。
    """
    data: DataSettings
    expert: ModelSpec
    amateurs: Tuple[AmateurSpec, ...]
    decode: DecodeSettings = field(default_factory=DecodeSettings)
    base: Path = field(default=Path("."), compare=False)
    source: Optional[Path] = field(default=None, compare=False)

    def resolve(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.base / path

    @property
    def out(self) -> Path:
        return self.resolve(self.data.out)

    @property
    def zoo_dir(self) -> Path:
        return self.out / "zoo"

    @property
    def domains(self) -> Dict[str, Path]:
        """評価するプロンプトファイル (ドメイン名 -> パス)"""
        slots = {name: getattr(self.data, name) for name in DOMAINS}
        found = {name: self.resolve(path) for name, path in slots.items() if path}
        if not found and self.data.prompts:
            found["prompts"] = self.resolve(self.data.prompts)
        return found

    def to_ini(self) -> str:
        parser = ConfigParser(interpolation=None)
        parser["data"] = _section(self.data)
        parser["expert"] = _section(self.expert)
        for amateur in self.amateurs:
            values = _section(amateur)
            values.pop("label")
            parser[AMATEUR_PREFIX + amateur.label] = values
        parser["decode"] = _section(self.decode)
        buffer = StringIO()
        parser.write(buffer)
        return buffer.getvalue()


def _format(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(value)
    return str(value)


def _section(settings: Any) -> Dict[str, str]:
    return {
        f.name: _format(getattr(settings, f.name))
        for f in fields(settings)
        if getattr(settings, f.name) is not None
    }


def _convert(settings_type: Any, values: Dict[str, str], section: str) -> Dict[str, Any]:
    known = {f.name: f for f in fields(settings_type)}
    converted: Dict[str, Any] = {}
    for key, text in values.items():
        if key not in known:
            raise ConfigError(f"[{section}] の {key} は不明なキーです。")
        kind = known[key].type
        try:
            if key == "strategies":
                converted[key] = tuple(item.strip() for item in text.split(",") if item.strip())
            elif kind is int:
                converted[key] = int(text)
            elif kind in (float, Optional[float]):
                converted[key] = float(text)
            else:
                converted[key] = text
        except ValueError:
            raise ConfigError(f"[{section}] {key} = {text} を解釈できません。")
    return converted


def parse_config(parser: ConfigParser, base: Path = Path("."), source: Optional[Path] = None) -> ExperimentConfig:
    """
    ConfigParserから実験設定を組み立てます。

    :param parser: 読み込み済みのConfigParser
    :param base: 相対パスの基準ディレクトリ
    :param source: 設定ファイルのパス
    :return: 実験設定
    """
    if not parser.has_section("data") or "train" not in parser["data"]:
        raise ConfigError("[data] に train がありません。")
    if not parser.has_section("expert") or "order" not in parser["expert"]:
        raise ConfigError("[expert] に order がありません。")

    try:
        data = DataSettings(**_convert(DataSettings, dict(parser["data"]), "data"))
        expert = ModelSpec(**_convert(ModelSpec, dict(parser["expert"]), "expert"))
        amateurs = []
        for section in parser.sections():
            if not section.startswith(AMATEUR_PREFIX):
                continue
            values = _convert(AmateurSpec, dict(parser[section]), section)
            if "order" not in values:
                raise ConfigError(f"[{section}] に order がありません。")
            amateurs.append(AmateurSpec(label=section[len(AMATEUR_PREFIX):], **values))
        decode = DecodeSettings(**_convert(DecodeSettings, dict(parser["decode"]), "decode")) \
            if parser.has_section("decode") else DecodeSettings()
    except TypeError as e:
        raise ConfigError(str(e))

    config = ExperimentConfig(data, expert, tuple(amateurs), decode, base, source)
    validate(config)
    return config


def validate(config: ExperimentConfig) -> None:
    settings = config.decode
    if not settings.strategies:
        raise ConfigError("strategies が空です。")
    for name in settings.strategies:
        if name not in STRATEGIES:
            raise ConfigError(f"未知の戦略: {name}")
    if settings.filter not in FILTERS:
        raise ConfigError(f"未知のフィルタ: {settings.filter}")
    if settings.vote_rule not in VOTE_RULES:
        raise ConfigError(f"未知の投票ルール: {settings.vote_rule}")
    if settings.vote_rule == "threshold" and settings.tau_c is None:
        raise ConfigError("vote_rule = threshold には tau_c が必要です。")
    if settings.ensemble_mode not in MODES:
        raise ConfigError(f"未知のモード: {settings.ensemble_mode}")
    if settings.workers < 1 or settings.repetitions < 1:
        raise ConfigError("workers と repetitions は1以上にしてください。")
    if config.data.prompt_len < 1:
        raise ConfigError("prompt_len は1以上にしてください。")
    labels = [amateur.label for amateur in config.amateurs]
    if len(set(labels)) != len(labels):
        raise ConfigError("アマチュアのラベルが重複しています。")
    try:
        for spec in (config.expert,) + config.amateurs:
            _ = spec.smoothing_spec
        strategy_grid(config)
    except MiniMacdException as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(e.message())


def check_files(config: ExperimentConfig) -> None:
    """設定が参照するファイルがすべて存在するか確認します。"""
    paths = [config.data.train] + [path for path in (config.data.prompts, config.data.news,
                                                     config.data.wiki, config.data.story) if path]
    paths += [amateur.bias for amateur in config.amateurs if amateur.bias]
    for path in paths:
        if not config.resolve(path).is_file():
            raise ConfigError(f"{path} が見つかりません。")


def read_parser(path: Path) -> ConfigParser:
    parser = ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except OSError:
        raise ConfigError(f"{path} を読み込めません。")
    except ConfigParserError as e:
        raise ConfigError(f"{path}: {e}")
    return parser


def config_path(path: Optional[Union[str, Path]] = None) -> Path:
    if path is None:
        path = environ.get(CONFIG_ENV)
    if not path:
        raise ConfigError(f"--config もしくは環境変数 {CONFIG_ENV} で設定ファイルを指定してください。")
    return Path(path)


def load_config(path: Optional[Union[str, Path]] = None, check: bool = True) -> ExperimentConfig:
    """
    設定ファイルを読み込みます。

    :param path: 設定ファイル (省略時は環境変数 MINIMACD_CONFIG)
    :param check: 参照しているファイルの存在を確認するか
    :return: 実験設定
    """
    resolved = config_path(path)
    config = parse_config(read_parser(resolved), resolved.parent, resolved)
    if check:
        check_files(config)
    logger.info("loaded config from %s (%d amateurs)", resolved, len(config.amateurs))
    return config


def with_overrides(config: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """
    CLIのフラグで設定を上書きします。Noneの値は無視されます。

    :param config: 元の設定
    :param overrides: DecodeSettingsのキー、もしくは out
    :return: 上書きした設定
    """
    values = {key: value for key, value in overrides.items() if value is not None}
    data = config.data
    if "out" in values:
        data = replace(data, out=str(values.pop("out")))
    if "strategies" in values and isinstance(values["strategies"], str):
        values["strategies"] = tuple(item.strip() for item in values["strategies"].split(","))
    try:
        decode = replace(config.decode, **values)
    except TypeError as e:
        raise ConfigError(str(e))
    overridden = replace(config, data=data, decode=decode)
    validate(overridden)
    return overridden


def vote_rule(settings: DecodeSettings) -> VoteRule:
    if settings.vote_rule == "threshold":
        if settings.tau_c is None:
            raise ConfigError("vote_rule = threshold には tau_c が必要です。")
        return LogProbThreshold(settings.tau_c)
    return TopRank(settings.r)


def filter_spec(settings: DecodeSettings) -> FilterSpec:
    if settings.filter == "delta":
        return DeltaMargin(settings.delta)
    if settings.filter == "joint":
        return Joint(settings.delta, settings.cr_cap)
    return TopK(settings.k)


def build_strategy(name: str, settings: DecodeSettings) -> StrategySpec:
    """
    戦略名と設定から戦略を作ります。

    :param name: greedy, topk, nucleus, typical, cd, macd-mean, macd-consensus
    :param settings: [decode] の設定
    :return: 戦略
    """
    if name == "greedy":
        return Greedy()
    if name == "topk":
        return TopKSample(settings.k, settings.seed)
    if name == "nucleus":
        return Nucleus(settings.p, settings.seed)
    if name == "typical":
        return Typical(settings.tau_t, settings.seed)
    if name == "cd":
        return CD(settings.alpha, filter_spec(settings), settings.beam_width)
    if name == "macd-mean":
        return MacdMean(settings.alpha, filter_spec(settings), settings.beam_width)
    if name == "macd-consensus":
        alpha = settings.alpha if settings.alpha_consensus is None else settings.alpha_consensus
        return MacdConsensus(alpha, filter_spec(settings), vote_rule(settings), settings.beam_width)
    raise ConfigError(f"未知の戦略: {name}")


def strategy_grid(config: ExperimentConfig) -> List[StrategySpec]:
    return [build_strategy(name, config.decode) for name in config.decode.strategies]


def decode_config(config: ExperimentConfig,
                  strategy: StrategySpec,
                  max_new_tokens: Optional[int] = None) -> DecodeConfig:
    return DecodeConfig(
        strategy=strategy,
        max_new_tokens=config.data.max_new_tokens if max_new_tokens is None else max_new_tokens,
        ensemble_mode=config.decode.ensemble_mode,
        logp_floor=config.decode.logp_floor
    )


def setup_logging(path: Optional[Path] = None, verbose: bool = False) -> None:
    """
    設定ファイルに[loggers]があればfileConfigで、なければstderrへのハンドラでログを設定します。

    :param path: 設定ファイル
    :param verbose: INFOまで出すか
    """
    if path is not None and path.is_file():
        parser = read_parser(path)
        if parser.has_section("loggers"):
            logging.config.fileConfig(path, disable_existing_loggers=False)
            if verbose:
                logging.getLogger().setLevel(logging.INFO)
            return

    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(logging.INFO if verbose else logging.WARNING)
