from typing import TYPE_CHECKING

from lib.checks import prompts_at_least, zoo_trained_only
from lib.commands import Cog, command
from lib.context import Context
from lib.embed import METRICS_COLUMNS, metrics_csv, metrics_json, metrics_record, render_table
from lib.experiment import Experiment, evaluate
from lib.zoo import load_zoo

if TYPE_CHECKING:
    from runner import MiniMacd

MIN_PROMPTS = 50


class EvaluateCog(Cog):
    def __init__(self, runner: 'MiniMacd') -> None:
        self.runner = runner

    @command("evaluate")
    @prompts_at_least(MIN_PROMPTS)
    @zoo_trained_only()
    def evaluate(self, ctx: Context) -> None:
        """戦略ごと・ドメインごとに多様性、繰り返し率、NLLを集計します。"""
        config = ctx.config
        experiment = Experiment(config, load_zoo(config))
        try:
            rows, cells = evaluate(experiment, MIN_PROMPTS)
        finally:
            experiment.close()
            experiment.zoo.close()

        ctx.write(config.out / "evaluate.csv", metrics_csv(rows))
        ctx.write(config.out / "evaluate.json", metrics_json(rows, cells, seed=config.decode.seed))
        ctx.send(render_table([metrics_record(row) for row in rows], METRICS_COLUMNS))


def setup(runner: 'MiniMacd') -> None:
    return runner.add_cog(EvaluateCog(runner))
