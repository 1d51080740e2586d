// Dependency-free canvas charts: reward curve and strategy-weight bars.

export function drawRewardCurve(canvas: HTMLCanvasElement, curve: number[]): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = '#ccc';
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
  if (curve.length === 0) return;

  const pad = 24;
  const maxY = Math.max(1, ...curve);
  const xOf = (i: number) => pad + (i / Math.max(1, curve.length - 1)) * (width - 2 * pad);
  const yOf = (v: number) => height - pad - (v / maxY) * (height - 2 * pad);

  ctx.strokeStyle = '#1668a8';
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(xOf(0), yOf(curve[0]));
  for (let i = 1; i < curve.length; i++) ctx.lineTo(xOf(i), yOf(curve[i]));
  ctx.stroke();

  ctx.fillStyle = '#444';
  ctx.font = '11px sans-serif';
  ctx.fillText(String(maxY), 4, yOf(maxY) + 4);
  ctx.fillText('0', 4, yOf(0) + 4);
}

export function drawWeightBars(
  canvas: HTMLCanvasElement,
  weights: number[] | null,
  names: string[],
): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (!weights || weights.length === 0) return;

  const colors = ['#1668a8', '#d97706', '#15803d', '#b91c1c', '#7c3aed', '#0f766e', '#a16207'];
  const barWidth = width / weights.length;
  weights.forEach((w, i) => {
    ctx.fillStyle = colors[i % colors.length];
    const h = w * (height - 18);
    ctx.fillRect(i * barWidth + 4, height - 14 - h, barWidth - 8, h);
    ctx.fillStyle = '#333';
    ctx.font = '10px sans-serif';
    const label = names[i] ?? `s${i}`;
    ctx.fillText(label.slice(0, 12), i * barWidth + 4, height - 3);
  });
}
