import sys
from app import create_app
from app import models
from app.cli import cli, main
from app.process_core import parse_process, to_term


app = create_app()
app.cli.add_command(cli, 'interleave')


@app.shell_context_processor
def make_shell_context():
    return {'models': models, 'parse_process': parse_process,
            'to_term': to_term}


if __name__ == '__main__':
    sys.exit(main())
