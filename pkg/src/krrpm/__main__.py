import sys

from krrpm.cli import main

sys.exit(main())
