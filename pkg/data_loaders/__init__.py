# Dataset loaders, generators and exact polynomial networks
