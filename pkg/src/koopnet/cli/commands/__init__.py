from koopnet.cli.commands.evaluate_command import cmd_evaluate
from koopnet.cli.commands.fit_command import cmd_fit
from koopnet.cli.commands.generate_command import cmd_generate

__all__ = ["cmd_evaluate", "cmd_fit", "cmd_generate"]
