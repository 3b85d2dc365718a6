# Experiment runners: MNIST sweeps, polynomial regression, CO2 forecasting and diagnostics
