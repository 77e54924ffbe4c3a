# Generated by Django 5.1.7 on 2026-10-17 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(max_length=32)),
                ('argv', models.JSONField(default=list)),
                ('config', models.JSONField(default=dict)),
                ('seeds', models.JSONField(default=dict)),
                ('input_digests', models.JSONField(default=dict)),
                ('outputs', models.JSONField(default=list)),
                ('tool_version', models.CharField(max_length=32)),
                ('started_at', models.DateTimeField()),
                ('finished_at', models.DateTimeField()),
                ('manifest_path', models.CharField(blank=True, max_length=1024)),
            ],
            options={
                'ordering': ['-started_at', '-id'],
            },
        ),
    ]
