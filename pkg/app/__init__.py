# sftkit application package
