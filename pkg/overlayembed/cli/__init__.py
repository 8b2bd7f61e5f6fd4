from overlayembed.cli.main import main
