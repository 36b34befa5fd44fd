import sys

from mocha_attention.cli import main

sys.exit(main())
