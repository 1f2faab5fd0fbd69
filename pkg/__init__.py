# Cluster q-Painleve Verification Engine



