from dataclasses import replace
from typing import TYPE_CHECKING

from lib.checks import zoo_trained_only
from lib.commands import Cog, argument, command
from lib.config import build_strategy, decode_config
from lib.context import Context
from lib.decoding.decoder import generate
from lib.errors import InvalidParameter
from lib.vocab import detokenize, tokenize
from lib.zoo import load_zoo

if TYPE_CHECKING:
    from runner import MiniMacd


class DecodeCog(Cog):
    def __init__(self, runner: 'MiniMacd') -> None:
        self.runner = runner

    @command("decode")
    @argument("prompt", nargs="*", help="プロンプトのテキスト")
    @argument("--max-new-tokens", type=int)
    @argument("--beam-width", type=int)
    @zoo_trained_only()
    def decode(self, ctx: Context) -> None:
        """プロンプトの続きを生成します。--strategyを省略すると設定のstrategiesの先頭を使います。"""
        config = ctx.config
        settings = config.decode
        if ctx.args.beam_width is not None:
            settings = replace(settings, beam_width=ctx.args.beam_width)
        strategy = build_strategy(settings.strategies[0], settings)

        zoo = load_zoo(config)
        try:
            prompt = tokenize(" ".join(ctx.args.prompt), zoo.vocab)
            if not prompt:
                raise InvalidParameter("プロンプトが空です。")
            generated, trace = generate(zoo.expert, zoo.ensemble, prompt,
                                        decode_config(config, strategy, ctx.args.max_new_tokens))
        finally:
            zoo.close()

        ctx.send(detokenize(generated, zoo.vocab))
        if ctx.args.trace:
            ctx.write(ctx.args.trace, trace.to_json())


def setup(runner: 'MiniMacd') -> None:
    return runner.add_cog(DecodeCog(runner))
