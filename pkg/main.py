import sys

from runner import MiniMacd


runner = MiniMacd()

extensions = [
    "cogs.train",
    "cogs.decode",
    "cogs.benchmark",
    "cogs.evaluate",
    "cogs.ablate"
]

for extension in extensions:
    runner.load_extension(extension)

sys.exit(runner.run(sys.argv[1:]))
