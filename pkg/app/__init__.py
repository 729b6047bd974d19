# Dominated cluster solver package
