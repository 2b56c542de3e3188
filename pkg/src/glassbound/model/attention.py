import torch
import torch.nn as nn


class AttentionBlock(nn.Module):
    """Spatial dot-product attention with a residual on the context.

    Queries come from ``query``, keys and values from ``context``; the
    softmax runs over key positions.  Output is ``gamma * attn(V) + context``
    with ``gamma`` starting at 0, so a fresh block is the identity.
    """

    # query rows per chunk; bounds the attention matrix at large resolutions
    chunk = 4096

    def __init__(self, query_channels, context_channels, reduction=8, heads=1):
        super().__init__()
        inner = max(context_channels // reduction, heads)
        if inner % heads or context_channels % heads:
            raise ValueError(f"heads={heads} must divide {inner} and {context_channels}")
        self.heads = heads
        self.query = nn.Conv2d(query_channels, inner, 1)
        self.key = nn.Conv2d(context_channels, inner, 1)
        self.value = nn.Conv2d(context_channels, context_channels, 1)
        self.gamma = nn.Parameter(torch.zeros(1))

    def _split(self, x):
        # N×C×H×W -> (N·heads)×(H·W)×(C/heads)
        n, c, h, w = x.shape
        return x.reshape(n * self.heads, c // self.heads, h * w).transpose(1, 2)

    def weights(self, query, context):
        """Attention matrix, (N·heads)×(queries)×(keys); rows sum to 1."""
        q = self._split(self.query(query))
        k = self._split(self.key(context))
        return torch.softmax(q @ k.transpose(1, 2), dim=-1)

    def forward(self, query, context):
        if query.shape[-2:] != context.shape[-2:]:
            raise ValueError(f"query {tuple(query.shape)} and context {tuple(context.shape)} differ spatially")
        n, c, h, w = context.shape
        q = self._split(self.query(query))
        k = self._split(self.key(context)).transpose(1, 2)
        v = self._split(self.value(context))
        if q.shape[1] <= self.chunk:
            out = torch.softmax(q @ k, dim=-1) @ v
        else:
            out = torch.cat([torch.softmax(q[:, i:i + self.chunk] @ k, dim=-1) @ v
                             for i in range(0, q.shape[1], self.chunk)], dim=1)
        out = out.transpose(1, 2).reshape(n, c, h, w)
        return self.gamma * out + context
