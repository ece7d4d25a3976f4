from snfe.cli import main
import sys

sys.exit(main())
