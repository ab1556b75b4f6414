from typing import TYPE_CHECKING

from lib.commands import Cog, command
from lib.context import Context
from lib.zoo import train_zoo

if TYPE_CHECKING:
    from runner import MiniMacd


class TrainCog(Cog):
    def __init__(self, runner: 'MiniMacd') -> None:
        self.runner = runner

    @command("train")
    def train(self, ctx: Context) -> None:
        """語彙を作り、エキスパートとアマチュアのn-gramモデルを学習して保存します。"""
        written = train_zoo(ctx.config)
        for path in written:
            ctx.send(str(path))
        ctx.success("学習が完了しました。", f"{len(written)}個のファイルを書き出しました。")


def setup(runner: 'MiniMacd') -> None:
    return runner.add_cog(TrainCog(runner))
