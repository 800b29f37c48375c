"""Feature extraction backbone.

Wraps a torchvision ResNet-18 in deterministic inference mode. Pretrained
weights are used when they are already cached on the machine; otherwise
the network is instantiated with a fixed seed so that the service stays a
pure function of pixel content (the contract the clients rely on), just
without meaningful semantics. /v1/info reports which variant is loaded.
"""

from __future__ import annotations

import numpy as np

_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)


class FeatureBackbone:
    def __init__(self, input_size: int = 224, seed: int = 0):
        import torch
        from torchvision.models import resnet18

        self._torch = torch
        torch.manual_seed(seed)
        model = None
        try:
            from torchvision.models import ResNet18_Weights

            model = resnet18(weights=ResNet18_Weights.IMAGENET1K_V1)
            self.model_name = "resnet18-imagenet"
        except Exception:
            model = resnet18(weights=None)
            self.model_name = f"resnet18-seeded-init-{seed}"
        model.fc = torch.nn.Identity()
        model.eval()
        for p in model.parameters():
            p.requires_grad_(False)
        self._model = model
        self.input_size = input_size
        self.feature_dim = 512
        mean = torch.tensor(_IMAGENET_MEAN).view(1, 3, 1, 1)
        std = torch.tensor(_IMAGENET_STD).view(1, 3, 1, 1)
        self._mean, self._std = mean, std

    def features(self, images: list[np.ndarray]) -> np.ndarray:
        """Deterministic feature vectors, one per image, order preserving.

        Images that do not match the input size are resized bilinearly;
        grayscale inputs are expanded to three channels.
        """
        torch = self._torch
        tensors = []
        with torch.inference_mode():
            for img in images:
                x = torch.from_numpy(np.ascontiguousarray(img)).float() / 255.0
                x = x.permute(2, 0, 1).unsqueeze(0)
                if x.shape[1] == 1:
                    x = x.expand(-1, 3, -1, -1)
                if x.shape[2] != self.input_size or x.shape[3] != self.input_size:
                    x = torch.nn.functional.interpolate(
                        x, size=(self.input_size, self.input_size),
                        mode="bilinear", align_corners=False)
                tensors.append(x)
            batch = (torch.cat(tensors, dim=0) - self._mean) / self._std
            feats = self._model(batch)
        return feats.cpu().numpy().astype(np.float64)
