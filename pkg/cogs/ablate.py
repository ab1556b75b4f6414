from typing import TYPE_CHECKING

from lib.checks import zoo_trained_only
from lib.commands import Cog, command
from lib.context import Context
from lib.embed import METRICS_COLUMNS, metrics_csv, metrics_json, metrics_record, render_table
from lib.experiment import Experiment, ablate
from lib.zoo import load_zoo

if TYPE_CHECKING:
    from runner import MiniMacd


class AblateCog(Cog):
    def __init__(self, runner: 'MiniMacd') -> None:
        self.runner = runner

    @command("ablate")
    @zoo_trained_only()
    def ablate(self, ctx: Context) -> None:
        """アマチュアの数(K=1..4)と集約方法、バイアス付きアマチュアの有無で比較します。"""
        config = ctx.config
        experiment = Experiment(config, load_zoo(config))
        try:
            rows = ablate(experiment)
        finally:
            experiment.close()
            experiment.zoo.close()

        ctx.write(config.out / "ablate.csv", metrics_csv(rows))
        ctx.write(config.out / "ablate.json", metrics_json(rows, seed=config.decode.seed))
        ctx.send(render_table([metrics_record(row) for row in rows], METRICS_COLUMNS))


def setup(runner: 'MiniMacd') -> None:
    return runner.add_cog(AblateCog(runner))
