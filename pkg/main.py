"""
matkg - materials literature knowledge maps

Command-line toolkit that:
- splits pre-extracted paper text into sections
- drives chat-completion models with three-part prompts (live, cached or replayed)
- parses model output into property tables and knowledge graphs
- scores generated text against references with ROUGE exact/relaxed match
"""

import sys

from app.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
