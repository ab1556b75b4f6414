from typing import TYPE_CHECKING

from lib.checks import prompts_at_least, zoo_trained_only
from lib.commands import Cog, command
from lib.context import Context
from lib.embed import TIMING_COLUMNS, render_table, timing_csv, timing_json, timing_record
from lib.experiment import MIN_BENCH_PROMPTS, Experiment, benchmark
from lib.zoo import load_zoo

if TYPE_CHECKING:
    from runner import MiniMacd


class BenchmarkCog(Cog):
    def __init__(self, runner: 'MiniMacd') -> None:
        self.runner = runner

    @command("benchmark")
    @prompts_at_least(MIN_BENCH_PROMPTS)
    @zoo_trained_only()
    def benchmark(self, ctx: Context) -> None:
        """デコードの所要時間を測ります。Kを1から4まで変えたsequentialとparallelの比較も含みます。"""
        config = ctx.config
        experiment = Experiment(config, load_zoo(config))
        try:
            rows = benchmark(experiment)
        finally:
            experiment.close()
            experiment.zoo.close()

        meta = dict(repetitions=config.decode.repetitions, max_new_tokens=config.data.max_new_tokens,
                    workers=config.decode.workers)
        ctx.write(config.out / "benchmark.csv", timing_csv(rows))
        ctx.write(config.out / "benchmark.json", timing_json(rows, **meta))
        ctx.send(render_table([timing_record(row) for row in rows], TIMING_COLUMNS))


def setup(runner: 'MiniMacd') -> None:
    return runner.add_cog(BenchmarkCog(runner))
