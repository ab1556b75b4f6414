from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging

from lib.config import ExperimentConfig, build_strategy, decode_config, strategy_grid
from lib.decoding.decoder import DecodeTrace, generate
from lib.decoding.strategy import Greedy, MacdConsensus, MacdMean, Nucleus, StrategySpec, is_contrastive
from lib.ensemble import PARALLEL, SEQUENTIAL, AmateurEnsemble
from lib.errors import InsufficientAmateurs, NotEnoughPrompts
from lib.metrics import MetricsReport, Row, TimingSummary, mean_report, measure, time_decode
from lib.vocab import TokenSequence, Vocabulary, tokenize
from lib.zoo import Zoo, read_documents

logger = logging.getLogger(__name__)

BENCH_NUCLEUS_P = 0.9
ABLATION_K = (1, 2, 3, 4)
MIN_BENCH_PROMPTS = 10


def extract_prompts(documents: Sequence[str], vocab: Vocabulary, prompt_len: int) -> List[TokenSequence]:
    """各文書の先頭prompt_len個のトークンをプロンプトにします。"""
    prompts = []
    for document in documents:
        ids = tokenize(document, vocab)[:prompt_len]
        if ids:
            prompts.append(ids)
    return prompts


def load_prompts(path: Path, vocab: Vocabulary, prompt_len: int, minimum: int = 1) -> List[TokenSequence]:
    prompts = extract_prompts(read_documents(path), vocab, prompt_len)
    if len(prompts) < minimum:
        raise NotEnoughPrompts(f"{path}: {len(prompts)}個 (必要: {minimum}個以上)")
    return prompts


@dataclass(frozen=True)
class Variant:
    """グリッドの1列 (表示名, 戦略, 使うアマチュア)"""
    method: str
    strategy: StrategySpec
    ensemble: Optional[AmateurEnsemble] = None


@dataclass
class CellResult:
    method: str
    domain: str
    index: int
    prompt: TokenSequence
    generated: TokenSequence
    trace: DecodeTrace
    report: MetricsReport

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "domain": self.domain,
            "index": self.index,
            "prompt": self.prompt,
            "generated": self.generated,
            "steps": len(self.trace.steps),
            "report": self.report.to_dict()
        }


@dataclass
class Experiment:
    """
    読み込み済みのモデルと設定で、戦略×プロンプトのグリッドを実行します。

    :param config: 実験設定
    :param zoo: 読み込み済みのモデル
    """
    config: ExperimentConfig
    zoo: Zoo
    owned: List[AmateurEnsemble] = field(default_factory=list)

    def close(self) -> None:
        for ensemble in self.owned:
            ensemble.close()
        self.owned.clear()

    @property
    def ensemble(self) -> AmateurEnsemble:
        if self.zoo.ensemble is None:
            raise InsufficientAmateurs("アマチュアが設定されていません。")
        return self.zoo.ensemble

    def sub_ensemble(self, k: int, workers: Optional[int] = None) -> AmateurEnsemble:
        ensemble = self.ensemble
        if k > ensemble.K:
            raise InsufficientAmateurs(f"{k}個必要ですが{ensemble.K}個しかありません。")
        selected = AmateurEnsemble(ensemble.members[:k], workers or k)
        self.owned.append(selected)
        return selected

    def variant(self, strategy: StrategySpec, method: Optional[str] = None,
                ensemble: Optional[AmateurEnsemble] = None) -> Variant:
        if ensemble is None and is_contrastive(strategy):
            ensemble = self.ensemble
        return Variant(method or strategy.name, strategy, ensemble)

    def grid(self) -> List[Variant]:
        return [self.variant(strategy) for strategy in strategy_grid(self.config)]

    def load_domains(self, minimum: int = 1) -> Dict[str, List[TokenSequence]]:
        domains = self.config.domains
        if not domains:
            raise NotEnoughPrompts("[data] に prompts もしくは news/wiki/story を指定してください。")
        return {
            name: load_prompts(path, self.zoo.vocab, self.config.data.prompt_len, minimum)
            for name, path in domains.items()
        }

    def run(self, variant: Variant, prompt: Sequence[int],
            max_new_tokens: Optional[int] = None) -> Tuple[TokenSequence, DecodeTrace]:
        config = decode_config(self.config, variant.strategy, max_new_tokens)
        return generate(self.zoo.expert, variant.ensemble, prompt, config)

    def run_cell(self, variant: Variant, domain: str, index: int, prompt: TokenSequence,
                 max_new_tokens: Optional[int] = None) -> CellResult:
        generated, trace = self.run(variant, prompt, max_new_tokens)
        logger.debug("%s/%s #%d: %d tokens", variant.method, domain, index, len(generated))
        return CellResult(variant.method, domain, index, prompt, generated, trace,
                          measure(self.zoo.expert, prompt, generated))

    def run_grid(self,
                 variants: Sequence[Variant],
                 domains: Dict[str, List[TokenSequence]],
                 max_new_tokens: Optional[int] = None) -> List[CellResult]:
        """
        全ての (戦略, ドメイン, プロンプト) を実行します。結果はこの順番で並びます。

        :param variants: 戦略のリスト
        :param domains: ドメイン名からプロンプトへの辞書
        :param max_new_tokens: 生成長 (省略時は設定の値)
        :return: セルごとの結果
        """
        cells = [
            (variant, domain, index, prompt)
            for variant in variants
            for domain, prompts in domains.items()
            for index, prompt in enumerate(prompts)
        ]
        with ThreadPoolExecutor(max_workers=self.config.decode.workers) as executor:
            results = list(executor.map(lambda cell: self.run_cell(*cell, max_new_tokens), cells))
        logger.info("ran %d cells (%d variants)", len(results), len(variants))
        return results


def aggregate(results: Sequence[CellResult]) -> List[Row]:
    """(method, domain) ごとに指標を平均します。最初に現れた順に並びます。"""
    groups: Dict[Tuple[str, str], List[MetricsReport]] = {}
    for result in results:
        groups.setdefault((result.method, result.domain), []).append(result.report)
    return [Row(method, domain, mean_report(reports)) for (method, domain), reports in groups.items()]


def evaluate(experiment: Experiment, minimum_prompts: int = 1) -> Tuple[List[Row], List[CellResult]]:
    """
    設定の戦略グリッドを全ドメインのプロンプトで実行し、集計します。

    :param experiment: 実験
    :param minimum_prompts: ドメインごとに必要なプロンプト数
    :return: 集計した行とセルごとの結果
    """
    domains = experiment.load_domains(minimum_prompts)
    results = experiment.run_grid(experiment.grid(), domains)
    return aggregate(results), results


@dataclass
class TimingRow:
    method: str
    summary: TimingSummary
    rel_speed: float
    k: Optional[int] = None
    mode: Optional[str] = None


def benchmark_variants(experiment: Experiment) -> List[Variant]:
    """グリッドの戦略に、基準のgreedyとp=0.9のnucleusを加えます。"""
    variants = [experiment.variant(Greedy())]
    for variant in experiment.grid():
        if isinstance(variant.strategy, Greedy):
            continue
        variants.append(variant)
        if isinstance(variant.strategy, Nucleus) and variant.strategy.p != BENCH_NUCLEUS_P:
            strategy = replace(variant.strategy, p=BENCH_NUCLEUS_P)
            variants.append(experiment.variant(strategy, f"nucleus(p={BENCH_NUCLEUS_P})"))
    return variants


def k_sweep_variants(experiment: Experiment) -> List[Tuple[int, str, Variant]]:
    settings = experiment.config.decode
    strategy = build_strategy("macd-mean", settings)
    sweep = []
    for k in ABLATION_K:
        if experiment.zoo.ensemble is None or k > experiment.zoo.ensemble.K:
            break
        for mode in (SEQUENTIAL, PARALLEL):
            ensemble = experiment.sub_ensemble(k, workers=k if mode == PARALLEL else 1)
            sweep.append((k, mode, Variant(f"macd-mean K={k} {mode}", strategy, ensemble)))
    return sweep


def benchmark(experiment: Experiment) -> List[TimingRow]:
    """
    デコードループの所要時間を戦略ごとに測ります。相対速度は同じ実行内のgreedyとの比です。

    :param experiment: 実験
    :return: 計測結果の行
    """
    config = experiment.config
    domains = experiment.load_domains(MIN_BENCH_PROMPTS)
    prompts = next(iter(domains.values()))[:config.decode.bench_prompts]
    if len(prompts) < MIN_BENCH_PROMPTS:
        raise NotEnoughPrompts(f"ベンチマークには{MIN_BENCH_PROMPTS}個以上のプロンプトが必要です。")
    repetitions = config.decode.repetitions

    rows: List[TimingRow] = []
    for variant in benchmark_variants(experiment):
        summary = time_decode(lambda prompt: experiment.run(variant, prompt), prompts, repetitions,
                              workers=config.decode.workers, label=variant.method)
        rows.append(TimingRow(variant.method, summary, summary.relative_to(rows[0].summary if rows else summary)))
    baseline = rows[0].summary

    for k, mode, variant in k_sweep_variants(experiment):
        summary = time_decode(
            lambda prompt: generate(experiment.zoo.expert, variant.ensemble, prompt,
                                    replace(decode_config(config, variant.strategy), ensemble_mode=mode)),
            prompts, repetitions, workers=variant.ensemble.workers if variant.ensemble else 1,
            label=variant.method
        )
        rows.append(TimingRow(variant.method, summary, summary.relative_to(baseline), k, mode))
    return rows


def bias_variants(experiment: Experiment) -> List[Variant]:
    """
    バイアスなしのアマチュアだけの組と、それにバイアス付きのアマチュアを1つずつ加えた組

    :param experiment: 実験
    :return: MacdMeanの行
    """
    ensemble = experiment.ensemble
    biased = {spec.label for spec in experiment.config.amateurs if spec.bias}
    standard = [i for i, member in enumerate(ensemble.members) if member.label not in biased]
    if not standard or not biased:
        return []
    strategy = build_strategy("macd-mean", experiment.config.decode)
    variants = [Variant("bias: standard", strategy, _select(experiment, standard))]
    for i, member in enumerate(ensemble.members):
        if member.label in biased:
            variants.append(Variant(f"bias: standard+{member.label}", strategy,
                                    _select(experiment, standard + [i])))
    return variants


def _select(experiment: Experiment, indices: List[int]) -> AmateurEnsemble:
    selected = experiment.ensemble.select(indices)
    experiment.owned.append(selected)
    return selected


def ablation_variants(experiment: Experiment) -> List[Variant]:
    ensemble = experiment.ensemble
    if ensemble.K < max(ABLATION_K):
        raise InsufficientAmateurs(f"{max(ABLATION_K)}個必要ですが{ensemble.K}個しかありません。")
    settings = experiment.config.decode
    cd = build_strategy("cd", settings)
    mean = build_strategy("macd-mean", settings)
    consensus = build_strategy("macd-consensus", settings)
    assert isinstance(mean, MacdMean) and isinstance(consensus, MacdConsensus)
    no_penalty = replace(mean, alpha=0.0)

    variants = [experiment.variant(Greedy()), experiment.variant(cd)]
    for k in ABLATION_K:
        sub = experiment.sub_ensemble(k)
        variants.append(Variant(f"mean K={k}", mean, sub))
        variants.append(Variant(f"consensus K={k}", consensus, sub))
        variants.append(Variant(f"no-penalty K={k}", no_penalty, sub))
    return variants + bias_variants(experiment)


def ablate(experiment: Experiment) -> List[Row]:
    """
    Kを1から4まで変えた平均・合意・ペナルティなしの比較と、バイアス付きアマチュアの比較をします。

    :param experiment: 実験
    :return: 集計した行
    """
    variants = ablation_variants(experiment)
    domains = experiment.load_domains()
    return aggregate(experiment.run_grid(variants, domains))

