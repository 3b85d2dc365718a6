# Utils package: errors, configuration, report schema, plotting
