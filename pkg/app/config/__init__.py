# Config package: solver.yaml (solver defaults), corpus.yaml (desk corpus grid)
