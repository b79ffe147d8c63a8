"""American put pricing under compound-Poisson jump diffusions."""
