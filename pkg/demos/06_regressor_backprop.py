"""
Dense regressor: gradient check and a training curve
====================================================

Backprop is checked against central differences, then the
128-64-64 network is fit to a noisy nonlinear target.
"""
import numpy as np

from msie.evaluation import r2
from msie.fusion import predict, train_price_model
from msie.neural import DenseNet, TrainConfig, grad_check, half_mse

rng = np.random.default_rng(0)
net = DenseNet.build([5, 8, 4, 1], ["relu", "relu", "identity"], rng)
x = rng.normal(size=(10, 5))
t = rng.normal(size=(10, 1))
print("max relative gradient error: %.2e" % grad_check(net, lambda out: half_mse(out, t), x))

X = rng.normal(size=(3000, 6))
y = np.sin(X[:, 0]) + 0.5 * X[:, 1] * X[:, 2] + 0.1 * rng.normal(size=3000)
train, test = slice(0, 2400), slice(2400, None)

model = train_price_model(X[train], y[train], TrainConfig(epochs=120, batch_size=256, learning_rate=0.01))
curve = np.array(model.loss_curve)
print("loss epoch 1 %.3f, 60 %.3f, 120 %.3f" % (curve[0], curve[59], curve[-1]))

yhat, _ = predict(model, X[test])
print("test R2 = %.3f" % r2(yhat, y[test]))
